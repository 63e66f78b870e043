"""Inferring a full repetition pattern from a short demonstration.

Two placements demonstrate a row; a third off the row axis upgrades it
to an oblique grid; a polyline turns the demonstration into spacing
along a curve.  Inference happens entirely in the flattened UV domain,
in millimeters.  All functions are pure: a suggestion carries enough of
its inputs to be regenerated after parameter edits.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geom2d import Polygon2, intersect, point_in_ring, point_on_ring

SPACING_TOLERANCE = 0.15  # fraction of |d1| a placement may sit off-lattice
ROTATION_TOLERANCE = 0.1  # radians of rotation spread before declining
GRID_PERP_FRACTION = 0.25  # perpendicular offset (of |d1|) that means "grid"
OVERLAP_FRACTION = 0.6  # footprint area share that must land in the region
DEDUPE_FRACTION = 0.2  # lattice sites this close to a demo anchor are its own


class AutocompleteError(ValueError):
    """Demonstration or edit outside the operation's domain."""


@dataclass(frozen=True, eq=False)
class PlacementEvent:
    """One placed element: where, how turned, how large, and in what order."""

    anchor: np.ndarray
    rotation: float
    scale: float
    seq: int

    def __post_init__(self):
        anchor = np.asarray(self.anchor, dtype=np.float64).reshape(2)
        if not np.all(np.isfinite(anchor)):
            raise AutocompleteError("placement anchor must be finite")
        anchor.setflags(write=False)
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "rotation", float(self.rotation))
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "seq", int(self.seq))
        if not np.isfinite(self.rotation):
            raise AutocompleteError("placement rotation must be finite")
        if not (self.scale > 0.0 and np.isfinite(self.scale)):
            raise AutocompleteError("placement scale must be positive")


@dataclass(frozen=True, eq=False)
class CurvePath:
    """2D polyline with its cumulative arclength table."""

    points: np.ndarray
    cumlen: np.ndarray = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise AutocompleteError("curve needs at least two 2D points")
        if not np.all(np.isfinite(pts)):
            raise AutocompleteError("curve points must be finite")
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(seg <= 1e-9):
            raise AutocompleteError(
                "consecutive curve points closer than 1e-9"
            )
        pts = pts.copy()
        pts.setflags(write=False)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        cum.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "cumlen", cum)
        d = np.diff(pts, axis=0)
        object.__setattr__(
            self, "_angles", np.unwrap(np.arctan2(d[:, 1], d[:, 0]))
        )
        object.__setattr__(self, "_mids", 0.5 * (cum[:-1] + cum[1:]))

    @property
    def length(self) -> float:
        return float(self.cumlen[-1])

    def point_at(self, t: float) -> np.ndarray:
        """Position at arclength t (clamped to the path's extent)."""
        t = float(np.clip(t, 0.0, self.length))
        j = int(np.searchsorted(self.cumlen, t, side="right") - 1)
        j = min(j, len(self.points) - 2)
        seg = self.cumlen[j + 1] - self.cumlen[j]
        w = (t - self.cumlen[j]) / seg
        return (1.0 - w) * self.points[j] + w * self.points[j + 1]

    def tangent_angle_at(self, t: float) -> float:
        """Tangent direction at arclength t.

        Each segment's direction is exact for the tangent at its arc
        midpoint, so the angle is interpolated between consecutive segment
        midpoints (unwrapped) and extrapolated linearly past the first and
        last midpoints: exact on straight runs and circular arcs, including
        at the path's endpoints.
        """
        angles, mids = self._angles, self._mids
        if len(angles) == 1:
            return float(angles[0])
        t = float(np.clip(t, 0.0, self.length))
        if t <= mids[0]:
            i = 0
        elif t >= mids[-1]:
            i = len(mids) - 2
        else:
            return float(np.interp(t, mids, angles))
        w = (t - mids[i]) / (mids[i + 1] - mids[i])
        return float(angles[i] + w * (angles[i + 1] - angles[i]))

    def nearest_arclength(self, p) -> float:
        """Arclength of the path point closest to p (lowest on ties)."""
        p = np.asarray(p, dtype=np.float64).reshape(2)
        a = self.points[:-1]
        d = np.diff(self.points, axis=0)
        seg2 = np.einsum("ij,ij->i", d, d)
        w = np.clip(np.einsum("ij,ij->i", p[None, :] - a, d) / seg2, 0.0, 1.0)
        proj = a + w[:, None] * d
        dist = np.linalg.norm(proj - p[None, :], axis=1)
        j = int(np.argmin(dist))
        return float(self.cumlen[j] + w[j] * np.sqrt(seg2[j]))


@dataclass(frozen=True, eq=False)
class PatternSuggestion:
    """A full placement list plus the generator that produced it.

    kind is one of "row", "grid", "curve".  The demonstrated events are
    kept verbatim at the front of ``placements``; everything needed to
    regenerate after an edit (region, footprint, path) rides along.
    """

    kind: str
    placements: tuple
    events: tuple
    region: Polygon2
    d1: np.ndarray | None = None
    d2: np.ndarray | None = None
    path: CurvePath | None = None
    spacing: float | None = None
    element: Polygon2 | None = None

    @property
    def density(self) -> float:
        """Repeat distance in millimeters."""
        if self.kind == "curve":
            return float(self.spacing)
        return float(np.linalg.norm(self.d1))

    @property
    def scale(self) -> float:
        return self.placements[0].scale

    @property
    def rotation(self) -> float:
        return self.placements[0].rotation

    @property
    def inferred(self) -> tuple:
        demo = {e.seq for e in self.events}
        return tuple(p for p in self.placements if p.seq not in demo)


# ------------------------------------------------------------- confinement

def _region_contains(region: Polygon2, p) -> bool:
    """Strict interior: points on any boundary ring do not count."""
    p = np.asarray(p, dtype=np.float64)
    for ring in region.rings:
        if point_on_ring(p[0], p[1], ring):
            return False
    if not point_in_ring(p[0], p[1], region.outer):
        return False
    return not any(point_in_ring(p[0], p[1], h) for h in region.holes)


def _placement_allowed(
    element: Polygon2 | None,
    region: Polygon2,
    anchor,
    rotation: float,
    scale: float,
) -> bool:
    """The footprint-overlap rule: enough of the element lands in-region.

    A missing element degenerates to point containment of the anchor.
    """
    if element is None:
        return _region_contains(region, anchor)
    fp = element.transformed(anchor, rotation, scale)
    total = fp.area
    if total <= 0.0:
        return _region_contains(region, anchor)
    inside = sum(piece.area for piece in intersect(region, fp))
    return inside >= OVERLAP_FRACTION * total


# ---------------------------------------------------------------- validate

def _checked_events(events) -> tuple:
    evs = tuple(events)
    if len(evs) < 2:
        raise AutocompleteError("pattern inference needs at least 2 events")
    for e in evs:
        if not isinstance(e, PlacementEvent):
            raise AutocompleteError("events must be PlacementEvent instances")
    seqs = [e.seq for e in evs]
    if any(b <= a for a, b in zip(seqs, seqs[1:])):
        raise AutocompleteError("event seq numbers must strictly increase")
    return evs


def _rotations_regular(evs) -> bool:
    base = evs[0].rotation
    return all(abs(e.rotation - base) <= ROTATION_TOLERANCE for e in evs)


def _lattice_coords(d1, d2, vec):
    """Coordinates of vec in the (d1, d2) basis."""
    m = np.column_stack([d1, d2])
    return np.linalg.solve(m, vec)


# -------------------------------------------------------------- generators

def _fill_row(evs, region, element, d1):
    """Both-direction extrapolation, stopping at the first failing site.

    A site sitting on a demonstrated anchor is the demonstration's own and
    is skipped without consulting the overlap rule — a demo placed at the
    region's edge must not cut the fill short.
    """
    a1 = evs[0].anchor
    base_rot = evs[0].rotation
    base_scale = evs[0].scale
    anchors = np.array([e.anchor for e in evs])
    step = float(np.linalg.norm(d1))
    keep = DEDUPE_FRACTION * step
    lo, hi = region.bbox()
    span = float(np.linalg.norm(hi - lo))
    kmax = int(np.ceil(span / step)) + 2

    sites = []
    for direction in (1, -1):
        k = direction
        while abs(k) <= kmax:
            p = a1 + k * d1
            if np.linalg.norm(anchors - p, axis=1).min() > keep:
                if not _placement_allowed(element, region, p,
                                          base_rot, base_scale):
                    break
                sites.append((k, p))
            k += direction
    sites.sort(key=lambda s: s[0])
    return [p for _, p in sites]


def _fill_grid(evs, region, element, d1, d2):
    """Bounded lattice scan over the region's bounding box."""
    a1 = evs[0].anchor
    base_rot = evs[0].rotation
    base_scale = evs[0].scale
    anchors = np.array([e.anchor for e in evs])
    keep = DEDUPE_FRACTION * min(
        float(np.linalg.norm(d1)), float(np.linalg.norm(d2))
    )
    lo, hi = region.bbox()
    corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]],
                        [lo[0], hi[1]], [hi[0], hi[1]]])
    coords = np.array([_lattice_coords(d1, d2, c - a1) for c in corners])
    klo, mlo = np.floor(coords.min(axis=0)).astype(int) - 1
    khi, mhi = np.ceil(coords.max(axis=0)).astype(int) + 1

    sites = []
    for k in range(klo, khi + 1):
        for m in range(mlo, mhi + 1):
            p = a1 + k * d1 + m * d2
            if not _placement_allowed(element, region, p,
                                      base_rot, base_scale):
                continue
            if np.linalg.norm(anchors - p, axis=1).min() > keep:
                sites.append(p)
    return sites


def _with_inferred(kind, evs, region, sites, rotations=None, **params):
    next_seq = max(e.seq for e in evs) + 1
    placements = list(evs)
    for i, p in enumerate(sites):
        rot = evs[0].rotation if rotations is None else rotations[i]
        placements.append(
            PlacementEvent(anchor=p, rotation=rot, scale=evs[0].scale,
                           seq=next_seq + i)
        )
    return PatternSuggestion(
        kind=kind, placements=tuple(placements), events=evs, region=region,
        **params,
    )


def infer_pattern(events, region_uv: Polygon2, element: Polygon2 | None = None):
    """Row or grid suggestion from the demonstrated placements, or None.

    Two events demonstrate a row along d1 = a2 - a1.  A third event whose
    perpendicular offset from that axis exceeds 0.25*|d1| turns it into the
    oblique grid spanned by d1 and d2 = a3 - a1.  Events that fit neither
    within the spacing/rotation tolerances yield None rather than a guess.
    """
    evs = _checked_events(events)
    if not _rotations_regular(evs):
        return None
    a1 = evs[0].anchor
    d1 = evs[1].anchor - a1
    step = float(np.linalg.norm(d1))
    if step <= 1e-12:
        return None

    d2 = None
    if len(evs) >= 3:
        u = d1 / step
        off3 = evs[2].anchor - a1
        perp = abs(off3[0] * u[1] - off3[1] * u[0])
        if perp > GRID_PERP_FRACTION * step:
            d2 = off3.copy()

    tol = SPACING_TOLERANCE * step
    if d2 is None:
        # every extra event must sit on the row lattice
        for e in evs[2:]:
            off = e.anchor - a1
            k = np.round(np.dot(off, d1) / (step * step))
            if np.linalg.norm(off - k * d1) > tol:
                return None
        sites = _fill_row(evs, region_uv, element, d1)
        return _with_inferred("row", evs, region_uv, sites,
                              d1=d1, element=element)

    for e in evs[3:]:
        km = np.round(_lattice_coords(d1, d2, e.anchor - a1))
        site = a1 + km[0] * d1 + km[1] * d2
        if np.linalg.norm(e.anchor - site) > tol:
            return None
    sites = _fill_grid(evs, region_uv, element, d1, d2)
    return _with_inferred("grid", evs, region_uv, sites,
                          d1=d1, d2=d2, element=element)


def _fill_curve(evs, path, region, element, spacing):
    s0 = path.nearest_arclength(evs[0].anchor)
    if path.length - s0 < spacing:
        raise AutocompleteError(
            "path too short for the demonstrated spacing"
        )
    anchors = np.array([e.anchor for e in evs])
    keep = DEDUPE_FRACTION * spacing
    tan0 = path.tangent_angle_at(s0)
    base_rot = evs[0].rotation
    base_scale = evs[0].scale

    sites = []
    rotations = []
    t = s0
    limit = path.length + 1e-9 * max(1.0, path.length)
    while t <= limit:
        p = path.point_at(t)
        rot = base_rot + (path.tangent_angle_at(t) - tan0)
        if np.linalg.norm(anchors - p, axis=1).min() > keep and (
            _placement_allowed(element, region, p, rot, base_scale)
        ):
            sites.append(p)
            rotations.append(rot)
        t += spacing
    return _with_inferred("curve", evs, region, sites,
                          rotations=rotations, path=path, spacing=spacing,
                          element=element)


def complete_along_curve(
    events,
    path: CurvePath,
    region_uv: Polygon2,
    element: Polygon2 | None = None,
) -> PatternSuggestion:
    """Repeat the demonstration along a polyline at the demonstrated spacing.

    Anchors sit at arclengths s0, s0+s, s0+2s, ... from the path point
    nearest the first anchor; each inferred rotation follows the turning of
    the path (first rotation plus the local tangent delta).
    """
    evs = _checked_events(events)
    if not isinstance(path, CurvePath):
        raise AutocompleteError("path must be a CurvePath")
    spacing = float(np.linalg.norm(evs[1].anchor - evs[0].anchor))
    if spacing <= 1e-12:
        raise AutocompleteError("demonstrated spacing is degenerate")
    return _fill_curve(evs, path, region_uv, element, spacing)


# ------------------------------------------------------------------ adjust

def _regenerate(kind, evs, region, element, d1, d2, path, spacing):
    if kind == "row":
        sites = _fill_row(evs, region, element, d1)
        return _with_inferred("row", evs, region, sites, d1=d1,
                              element=element)
    if kind == "grid":
        sites = _fill_grid(evs, region, element, d1, d2)
        return _with_inferred("grid", evs, region, sites, d1=d1, d2=d2,
                              element=element)
    return complete_along_curve(evs, path, region, element)


def adjust(
    suggestion: PatternSuggestion,
    *,
    density: float | None = None,
    scale: float | None = None,
    rotation: float | None = None,
    move_anchor: tuple | None = None,
) -> PatternSuggestion:
    """One parameter edit, then regeneration through the same generator.

    density rescales the repeat distance (grid axes keep their shape);
    scale/rotation apply to every placement; move_anchor relocates one
    demonstrated event and re-runs inference, so the result matches what
    the edited demonstration would have suggested.
    """
    edits = [e for e in (density, scale, rotation, move_anchor)
             if e is not None]
    if len(edits) != 1:
        raise AutocompleteError("adjust applies exactly one edit at a time")

    evs = suggestion.events
    d1, d2 = suggestion.d1, suggestion.d2
    path, spacing = suggestion.path, suggestion.spacing

    if density is not None:
        if density <= 0.0:
            raise AutocompleteError("density must be positive")
        if suggestion.kind == "curve":
            return _fill_curve(evs, path, suggestion.region,
                               suggestion.element, float(density))
        factor = density / float(np.linalg.norm(d1))
        return _regenerate(suggestion.kind, evs, suggestion.region,
                           suggestion.element, d1 * factor,
                           None if d2 is None else d2 * factor, path, spacing)

    if scale is not None:
        if scale <= 0.0:
            raise AutocompleteError("scale must be positive")
        out = _regenerate(suggestion.kind,
                          tuple(replace(e, scale=scale) for e in evs),
                          suggestion.region, suggestion.element,
                          d1, d2, path, spacing)
        return out

    if rotation is not None:
        return _regenerate(suggestion.kind,
                           tuple(replace(e, rotation=rotation) for e in evs),
                           suggestion.region, suggestion.element,
                           d1, d2, path, spacing)

    seq, new_anchor = move_anchor
    new_anchor = np.asarray(new_anchor, dtype=np.float64).reshape(2)
    if not any(e.seq == seq for e in evs):
        raise AutocompleteError("move_anchor seq %r not demonstrated" % seq)
    evs = tuple(
        replace(e, anchor=new_anchor) if e.seq == seq else e for e in evs
    )
    if suggestion.kind == "curve":
        return complete_along_curve(evs, path, suggestion.region,
                                    suggestion.element)
    out = infer_pattern(evs, suggestion.region, suggestion.element)
    if out is None:
        raise AutocompleteError(
            "edited demonstration is no longer a regular pattern"
        )
    return out


# ------------------------------------------------------------- text format

DEMO_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class DemoScript:
    """Parsed demonstration: events, optional curve, region reference."""

    events: tuple
    curve: CurvePath | None
    region_ref: str


def format_demo(events, curve: CurvePath | None = None,
                region_ref: str = "-") -> str:
    """Structured-text demonstration script (CLI and service input)."""
    if any(ch.isspace() for ch in region_ref) or not region_ref:
        raise AutocompleteError("region reference must be one spaceless word")
    lines = ["meshtex-demo %d" % DEMO_FORMAT_VERSION]
    lines.append("region %s" % region_ref)
    evs = tuple(events)
    lines.append("events %d" % len(evs))
    for e in evs:
        lines.append(
            "%d %.17g %.17g %.17g %.17g"
            % (e.seq, e.anchor[0], e.anchor[1], e.rotation, e.scale)
        )
    pts = curve.points if curve is not None else np.empty((0, 2))
    lines.append("curve %d" % len(pts))
    for p in pts:
        lines.append("%.17g %.17g" % (p[0], p[1]))
    return "\n".join(lines) + "\n"


def parse_demo(text: str) -> DemoScript:
    """Demonstration script back out of its structured-text form."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("meshtex-demo"):
        raise AutocompleteError("not a demonstration script")
    try:
        version = int(lines[0].split()[1])
        if version != DEMO_FORMAT_VERSION:
            raise AutocompleteError(
                "unsupported demo format version %d" % version
            )
        if not lines[1].startswith("region "):
            raise AutocompleteError("malformed demo script")
        region_ref = lines[1].split()[1]
        if not lines[2].startswith("events "):
            raise AutocompleteError("malformed demo script")
        count = int(lines[2].split()[1])
        events = []
        for ln in lines[3:3 + count]:
            toks = ln.split()
            if len(toks) != 5:
                raise AutocompleteError("malformed demo event row")
            events.append(PlacementEvent(
                anchor=np.array([float(toks[1]), float(toks[2])]),
                rotation=float(toks[3]), scale=float(toks[4]),
                seq=int(toks[0]),
            ))
        curve_line = lines[3 + count]
        if not curve_line.startswith("curve "):
            raise AutocompleteError("malformed demo script")
        n_curve = int(curve_line.split()[1])
        pts = []
        rows = lines[4 + count:4 + count + n_curve]
        if len(rows) != n_curve:
            raise AutocompleteError("curve point count mismatch")
        for ln in rows:
            x, y = (float(tok) for tok in ln.split())
            pts.append((x, y))
    except AutocompleteError:
        raise
    except (IndexError, ValueError) as exc:
        raise AutocompleteError("malformed demo script") from exc
    curve = CurvePath(np.array(pts)) if pts else None
    return DemoScript(events=tuple(events), curve=curve,
                      region_ref=region_ref)
