"""Stamp placed 2D elements into mesh faces without moving the surface.

Each placement transforms the element outline into the UV chart.  Faces
crossed by the outline are clipped into interior (inside the outline)
and surround (outside) pieces, each piece is retriangulated with the
outline as constrained edges, and the new 2D vertices are mapped back
onto the original surface barycentrically — so the outline becomes real
mesh edges while the surface geometry stays put.  Interior faces are
tagged for the extrusion stage, and every placement reports the closed
vertex loops that bound its interior patch.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .geom2d import Polygon2, cdt, clear_incidences, difference, intersect
from .geom2d.clip import _canonical_normal
from .geom2d.polygon import DUPLICATE_SPACING
from .mesh import TAG_INTERIOR, TriMesh
from .svgelem import TextureElement
from .uvmap import UVChart, uv_to_3d

OVERLAP_AREA_LIMIT = 1e-9  # mm^2, max tolerated pairwise footprint overlap
PIECE_AREA_FLOOR = 1e-12   # mm^2, clip pieces below this are discarded
COVERAGE_SLACK = 1e-6      # relative footprint area allowed off the chart

# Clip crossing points closer than the ring-cleaning spacing to a ring
# vertex would be dropped, and the two faces sharing a chart edge keep
# different survivors — a T-junction crack.  Footprints are therefore
# nudged until every vertex/edge pair clears this distance, which bounds
# all crossing separations from below.
NEAR_INCIDENCE = 4.0 * DUPLICATE_SPACING
NUDGE_STEP = 1e-8  # mm, initial shift away from a near-incidence


class ImprintError(ValueError):
    """Invalid placements or a footprint that misses the chart."""


class SeamSplitWarning(UserWarning):
    """A footprint ran past the chart boundary (a seam or the mesh edge)
    and was imprinted only where it landed on the chart."""


@dataclass(frozen=True, eq=False)
class ImprintedMesh:
    """A mesh with element outlines embedded as edges.

    ``interior_boundary_loops[p]`` holds, for placement ``p``, one vertex
    index loop per element ring, ordered so the interior patch lies to
    the left of each directed edge.  ``placement_faces[p]`` lists the
    face indices tagged interior for that placement.  ``chart`` maps the
    new face set back to UV (one row per output face).
    """

    mesh: TriMesh
    interior_boundary_loops: tuple
    chart: UVChart
    placement_faces: tuple

    @property
    def n_placements(self) -> int:
        return len(self.interior_boundary_loops)


def _chart_segments(chart: UVChart) -> np.ndarray:
    """All chart edges as (3F, 2, 2) segment endpoint pairs."""
    uv = chart.uv
    return np.concatenate([uv[:, [0, 1]], uv[:, [1, 2]], uv[:, [2, 0]]])


def footprints(element: TextureElement, placements) -> list:
    """Transformed element outline per placement, in chart coordinates."""
    return [
        element.shape.transformed(ev.anchor, ev.rotation, ev.scale)
        for ev in placements
    ]


def _point_segment_distances(points, a, b) -> np.ndarray:
    """Distance of each point to each segment, shape (P, S)."""
    ab = b - a
    ap = points[:, None, :] - a[None]
    denom = np.maximum((ab * ab).sum(axis=1), 1e-300)
    t = np.clip((ap * ab[None]).sum(axis=2) / denom, 0.0, 1.0)
    closest = a[None] + t[..., None] * ab[None]
    return np.linalg.norm(points[:, None] - closest, axis=2)


def _near_incidence(fp: Polygon2, seg_a, seg_b):
    """Segment whose distance to a footprint vertex (or whose endpoint's
    distance to a footprint edge) is below NEAR_INCIDENCE, else None."""
    pts = np.concatenate(fp.rings)
    lo = pts.min(axis=0) - 1.0
    hi = pts.max(axis=0) + 1.0
    near = (
        (np.minimum(seg_a, seg_b)[:, 0] <= hi[0])
        & (np.maximum(seg_a, seg_b)[:, 0] >= lo[0])
        & (np.minimum(seg_a, seg_b)[:, 1] <= hi[1])
        & (np.maximum(seg_a, seg_b)[:, 1] >= lo[1])
    )
    ca = seg_a[near]
    cb = seg_b[near]
    if len(ca) == 0:
        return None
    d = _point_segment_distances(pts, ca, cb)
    hits = np.nonzero((d < NEAR_INCIDENCE).any(axis=0))[0]
    if len(hits):
        s = int(hits[0])
        return ca[s], cb[s]
    ends = np.unique(np.concatenate([ca, cb]), axis=0)
    inside = (
        (ends[:, 0] >= lo[0]) & (ends[:, 0] <= hi[0])
        & (ends[:, 1] >= lo[1]) & (ends[:, 1] <= hi[1])
    )
    ends = ends[inside]
    if len(ends):
        for ring in fp.rings:
            d = _point_segment_distances(
                ends, ring, np.roll(ring, -1, axis=0)
            )
            hits = np.nonzero((d < NEAR_INCIDENCE).any(axis=0))[0]
            if len(hits):
                s = int(hits[0])
                return ring[s], np.roll(ring, -1, axis=0)[s]
    return None


def _clear_footprint(fp: Polygon2, segments: np.ndarray) -> Polygon2:
    """Shift the footprint off every exact and near incidence."""
    fp = clear_incidences(fp, segments)
    seg_a = np.ascontiguousarray(segments[:, 0])
    seg_b = np.ascontiguousarray(segments[:, 1])
    for attempt in range(32):
        bad = _near_incidence(fp, seg_a, seg_b)
        if bad is None:
            return fp
        n = _canonical_normal(bad[0], bad[1])
        fp = fp.translated(*(n * (NUDGE_STEP * 2.0 ** attempt)))
        fp = clear_incidences(fp, segments)
    raise ImprintError("footprint could not be nudged clear of chart edges")


def _check_disjoint(fps) -> None:
    boxes = [fp.bbox() for fp in fps]
    for i in range(len(fps)):
        lo_i, hi_i = boxes[i]
        for j in range(i + 1, len(fps)):
            lo_j, hi_j = boxes[j]
            if (
                lo_i[0] > hi_j[0]
                or lo_j[0] > hi_i[0]
                or lo_i[1] > hi_j[1]
                or lo_j[1] > hi_i[1]
            ):
                continue
            area = sum(p.area for p in intersect(fps[i], fps[j]))
            if area >= OVERLAP_AREA_LIMIT:
                raise ImprintError(
                    "placements %d and %d overlap (area %g)" % (i, j, area)
                )


def _interior_loops(faces: np.ndarray) -> tuple:
    """Closed boundary loops of a face subset, interior kept on the left.

    Directed edges that appear in exactly one face of the subset chain
    into loops (the faces wind counter-clockwise, so each loop runs with
    the patch to its left).  Loops are ordered and started at their
    smallest vertex index for determinism.
    """
    if len(faces) == 0:
        return ()
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    key = np.sort(e, axis=1)
    _, inv, counts = np.unique(
        key, axis=0, return_inverse=True, return_counts=True
    )
    inv = np.asarray(inv).reshape(-1)
    border = e[counts[inv] == 1]
    succ: dict = {}
    for a, b in border:
        a, b = int(a), int(b)
        if a in succ:
            raise ImprintError("texture boundary branches at vertex %d" % a)
        succ[a] = b
    loops = []
    seen: set = set()
    for start in sorted(succ):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        v = succ[start]
        while v != start:
            if v in seen or v not in succ:
                raise ImprintError(
                    "texture boundary is not closed at vertex %d" % v
                )
            loop.append(v)
            seen.add(v)
            v = succ[v]
        loops.append(np.array(loop, dtype=np.int64))
    return tuple(loops)


def imprint(
    mesh: TriMesh,
    chart: UVChart,
    element: TextureElement,
    placements,
) -> ImprintedMesh:
    """Embed the element outline at every placement into the mesh.

    Placements must not overlap (pairwise footprint intersection below
    ``OVERLAP_AREA_LIMIT``) and every footprint must land at least
    partly on the chart.  A footprint running past the chart boundary
    is imprinted where it lands and reported via ``SeamSplitWarning``.
    """
    if chart.n_faces != mesh.n_faces:
        raise ImprintError(
            "chart has %d faces but mesh has %d"
            % (chart.n_faces, mesh.n_faces)
        )
    events = tuple(placements)
    if not events:
        return ImprintedMesh(
            mesh=mesh, interior_boundary_loops=(), chart=chart,
            placement_faces=(),
        )
    fps = footprints(element, events)
    _check_disjoint(fps)
    segments = _chart_segments(chart)
    fps = [_clear_footprint(fp, segments) for fp in fps]

    uv = chart.uv
    fmin = uv.min(axis=1)
    fmax = uv.max(axis=1)
    covering: dict = {}
    for pidx, fp in enumerate(fps):
        lo, hi = fp.bbox()
        cand = np.nonzero(
            (fmin[:, 0] <= hi[0])
            & (fmax[:, 0] >= lo[0])
            & (fmin[:, 1] <= hi[1])
            & (fmax[:, 1] >= lo[1])
        )[0]
        for f in cand:
            covering.setdefault(int(f), []).append(pidx)

    n0 = mesh.n_vertices
    key_to_vertex: dict = {}
    new_positions: list = []
    out_faces: list = []
    out_tags: list = []
    out_uv: list = []
    out_dist: list = []
    face_owner: list = []
    covered_area = np.zeros(len(events))

    def vertex_for(x: float, y: float, face: int) -> int:
        key = (float(x), float(y))
        got = key_to_vertex.get(key)
        if got is None:
            got = n0 + len(new_positions)
            new_positions.append(
                uv_to_3d(chart, mesh, face, np.array([x, y]))
            )
            key_to_vertex[key] = got
        return got

    def emit(piece: Polygon2, face: int, owner: int, tag: int) -> None:
        tri2 = cdt(piece)
        ids = [vertex_for(x, y, face) for x, y in tri2.points]
        for a, b, c in tri2.triangles:
            out_faces.append((ids[a], ids[b], ids[c]))
            out_tags.append(tag)
            out_uv.append(tri2.points[[a, b, c]])
            out_dist.append(chart.area_distortion[face])
            face_owner.append(owner)

    tags = mesh.face_tags
    for f in range(mesh.n_faces):
        plist = covering.get(f)
        interiors: list = []
        surround: list = []
        if plist:
            tri_poly = Polygon2(uv[f])
            for k in range(3):
                key = (float(uv[f, k, 0]), float(uv[f, k, 1]))
                key_to_vertex.setdefault(key, int(mesh.faces[f, k]))
            surround = [tri_poly]
            for pidx in plist:
                fp = fps[pidx]
                inter: list = []
                outside: list = []
                for s in surround:
                    inter.extend(
                        q for q in intersect(s, fp)
                        if q.area > PIECE_AREA_FLOOR
                    )
                    outside.extend(
                        q for q in difference(s, fp)
                        if q.area > PIECE_AREA_FLOOR
                    )
                surround = outside
                if inter:
                    interiors.append((pidx, inter))
                    covered_area[pidx] += sum(q.area for q in inter)
        if not interiors:
            out_faces.append(tuple(mesh.faces[f]))
            out_tags.append(tags[f])
            out_uv.append(uv[f])
            out_dist.append(chart.area_distortion[f])
            face_owner.append(-1)
            continue
        if not surround and len(interiors) == 1:
            # face wholly inside one footprint: keep it, just retag
            out_faces.append(tuple(mesh.faces[f]))
            out_tags.append(TAG_INTERIOR)
            out_uv.append(uv[f])
            out_dist.append(chart.area_distortion[f])
            face_owner.append(interiors[0][0])
            continue
        for pidx, pieces in interiors:
            for piece in pieces:
                emit(piece, f, pidx, TAG_INTERIOR)
        for piece in surround:
            emit(piece, f, -1, int(tags[f]))

    for pidx, fp in enumerate(fps):
        if covered_area[pidx] <= 0.0:
            raise ImprintError(
                "placement %d does not intersect the chart" % pidx
            )
        if covered_area[pidx] < fp.area * (1.0 - COVERAGE_SLACK):
            warnings.warn(
                "placement %d runs past the chart boundary; imprinted "
                "%.6g of %.6g mm^2" % (pidx, covered_area[pidx], fp.area),
                SeamSplitWarning,
                stacklevel=2,
            )

    if new_positions:
        positions = np.concatenate(
            [mesh.positions, np.asarray(new_positions)]
        )
    else:
        positions = mesh.positions
    faces = np.array(out_faces, dtype=np.int64)
    new_mesh = TriMesh(positions, faces, np.array(out_tags, dtype=np.uint8))
    new_chart = UVChart(
        np.asarray(out_uv), chart.seam_edges,
        np.asarray(out_dist), chart.energy_history,
    )
    owners = np.array(face_owner, dtype=np.int64)
    loops = tuple(
        _interior_loops(faces[owners == pidx])
        for pidx in range(len(events))
    )
    placement_faces = tuple(
        np.nonzero(owners == pidx)[0] for pidx in range(len(events))
    )
    return ImprintedMesh(
        mesh=new_mesh, interior_boundary_loops=loops, chart=new_chart,
        placement_faces=placement_faces,
    )


def imprint_in_region(
    mesh: TriMesh,
    region_faces,
    element: TextureElement,
    placements,
    chart: UVChart | None = None,
):
    """Imprint on a face subset flattened on its own, then merge back.

    The region faces are lifted into a submesh, flattened (or matched
    against a caller-supplied ``chart`` of that submesh, e.g. the file
    a parametrize run wrote), imprinted, and stitched back into the
    full mesh.  Returns ``(imprinted, region_chart)``; placement
    anchors live in the region chart's UV coordinates.

    The merged result's chart carries zero rows for faces outside the
    region — the region chart is the authoritative UV source.
    """
    from .uvmap import build_chart

    region = np.unique(np.asarray(region_faces, dtype=np.int64).reshape(-1))
    if len(region) == 0:
        raise ImprintError("region is empty")
    if region[0] < 0 or region[-1] >= mesh.n_faces:
        raise ImprintError("region face index out of range")

    keep = np.ones(mesh.n_faces, dtype=bool)
    keep[region] = False
    sub_vids = np.unique(mesh.faces[region])
    remap = np.full(mesh.n_vertices, -1, dtype=np.int64)
    remap[sub_vids] = np.arange(len(sub_vids))
    sub = TriMesh(
        np.ascontiguousarray(mesh.positions[sub_vids]),
        remap[mesh.faces[region]],
        mesh.face_tags[region],
    )
    if chart is None:
        chart = build_chart(sub)
    elif chart.n_faces != sub.n_faces:
        raise ImprintError(
            "chart has %d faces but the region has %d"
            % (chart.n_faces, sub.n_faces)
        )

    im = imprint(sub, chart, element, placements)

    n_sub0 = sub.n_vertices
    n_new = im.mesh.n_vertices - n_sub0
    sub2full = np.concatenate(
        [sub_vids, mesh.n_vertices + np.arange(n_new, dtype=np.int64)]
    )
    positions = (
        np.concatenate([mesh.positions, im.mesh.positions[n_sub0:]])
        if n_new
        else mesh.positions
    )
    kept_faces = mesh.faces[keep]
    merged_faces = np.concatenate([kept_faces, sub2full[im.mesh.faces]])
    merged_tags = np.concatenate([mesh.face_tags[keep], im.mesh.face_tags])
    merged = TriMesh(positions, merged_faces, merged_tags)

    offset = len(kept_faces)
    loops = tuple(
        tuple(sub2full[loop] for loop in loop_group)
        for loop_group in im.interior_boundary_loops
    )
    pfaces = tuple(pf + offset for pf in im.placement_faces)

    uv = np.zeros((len(merged_faces), 3, 2))
    uv[offset:] = im.chart.uv
    dist = np.zeros(len(merged_faces))
    dist[offset:] = im.chart.area_distortion
    seams = frozenset(
        (int(sub2full[a]), int(sub2full[b])) for a, b in im.chart.seam_edges
    )
    merged_chart = UVChart(uv, seams, dist, im.chart.energy_history)
    out = ImprintedMesh(
        mesh=merged, interior_boundary_loops=loops, chart=merged_chart,
        placement_faces=pfaces,
    )
    return out, chart
