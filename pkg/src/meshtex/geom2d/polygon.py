"""2D polygon with holes: rings, areas, containment, validation.

A ring is an (n, 2) float array without a closing repeat.  Polygon2
stores one CCW outer ring plus zero or more CW hole rings; the
constructor fixes orientation and strips near-duplicate consecutive
points, while full geometric validation (simplicity, hole containment)
is the separate validate() since clip internals build many transient
polygons that are valid by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .predicates import on_segment, orient2d_sign, orient2d_val

DUPLICATE_SPACING = 1e-9


class PolygonError(ValueError):
    """Invalid polygon input."""


def clean_ring(ring) -> np.ndarray:
    """Drop consecutive points closer than the duplicate spacing, and the
    closing repeat if present."""
    r = np.asarray(ring, dtype=np.float64)
    if r.ndim != 2 or r.shape[1] != 2:
        raise PolygonError("ring must be (n, 2)")
    if len(r) >= 2 and np.linalg.norm(r[0] - r[-1]) <= DUPLICATE_SPACING:
        r = r[:-1]
    if len(r) == 0:
        return r.reshape(0, 2)
    keep = [0]
    for i in range(1, len(r)):
        if np.linalg.norm(r[i] - r[keep[-1]]) > DUPLICATE_SPACING:
            keep.append(i)
    return r[keep]


def ring_area(ring) -> float:
    """Signed shoelace area, positive for CCW."""
    r = np.asarray(ring, dtype=np.float64)
    if len(r) < 3:
        return 0.0
    x = r[:, 0]
    y = r[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def ring_centroid(ring) -> np.ndarray:
    """Area centroid of the region bounded by a simple ring."""
    r = np.asarray(ring, dtype=np.float64)
    x = r[:, 0]
    y = r[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2.0
    if abs(a) < 1e-300:
        return r.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * a)
    cy = ((y + yn) * cross).sum() / (6.0 * a)
    return np.array([cx, cy])


def point_in_ring(px: float, py: float, ring: np.ndarray) -> bool:
    """Even-odd containment via robust crossing counting.

    Points exactly on the boundary are not handled consistently; callers
    arrange (by perturbation) never to ask about boundary points.
    """
    inside = False
    n = len(ring)
    for i in range(n):
        ax, ay = ring[i]
        bx, by = ring[(i + 1) % n]
        if (ay > py) != (by > py):
            o = orient2d_sign(ax, ay, bx, by, px, py)
            if by > ay:
                if o > 0:
                    inside = not inside
            else:
                if o < 0:
                    inside = not inside
    return inside


def point_on_ring(px: float, py: float, ring: np.ndarray) -> bool:
    n = len(ring)
    for i in range(n):
        ax, ay = ring[i]
        bx, by = ring[(i + 1) % n]
        if on_segment(ax, ay, bx, by, px, py):
            return True
    return False


def ring_is_simple(ring: np.ndarray) -> bool:
    """No two non-adjacent edges intersect; adjacent edges meet only at
    their shared endpoint.  O(n^2), used on ingest paths only."""
    n = len(ring)
    if n < 3:
        return False
    for i in range(n):
        a1 = ring[i]
        a2 = ring[(i + 1) % n]
        for j in range(i + 1, n):
            adjacent = j == i + 1 or (i == 0 and j == n - 1)
            b1 = ring[j]
            b2 = ring[(j + 1) % n]
            if adjacent:
                # shared endpoint allowed; any further contact is not
                shared = a2 if j == i + 1 else a1
                other = b2 if j == i + 1 else b1
                if on_segment(a1[0], a1[1], a2[0], a2[1], other[0], other[1]) and not np.array_equal(other, shared):
                    if min(a1[0], a2[0]) <= other[0] <= max(a1[0], a2[0]):
                        return False
                continue
            if _segments_touch(a1, a2, b1, b2):
                return False
    return True


def _segments_touch(p, q, a, b) -> bool:
    o1 = orient2d_sign(p[0], p[1], q[0], q[1], a[0], a[1])
    o2 = orient2d_sign(p[0], p[1], q[0], q[1], b[0], b[1])
    o3 = orient2d_sign(a[0], a[1], b[0], b[1], p[0], p[1])
    o4 = orient2d_sign(a[0], a[1], b[0], b[1], q[0], q[1])
    if o1 != o2 and o3 != o4:
        return True
    for (u, v, w) in ((p, q, a), (p, q, b), (a, b, p), (a, b, q)):
        if on_segment(u[0], u[1], v[0], v[1], w[0], w[1]):
            return True
    return False


@dataclass(frozen=True)
class Polygon2:
    outer: np.ndarray
    holes: tuple = field(default=())

    def __post_init__(self):
        outer = clean_ring(self.outer)
        if len(outer) < 3:
            raise PolygonError("outer ring needs at least 3 distinct points")
        if ring_area(outer) < 0:
            outer = outer[::-1].copy()
        holes = []
        for h in self.holes:
            hr = clean_ring(h)
            if len(hr) < 3:
                raise PolygonError("hole ring needs at least 3 distinct points")
            if ring_area(hr) > 0:
                hr = hr[::-1].copy()
            holes.append(hr)
        outer.setflags(write=False)
        for h in holes:
            h.setflags(write=False)
        object.__setattr__(self, "outer", outer)
        object.__setattr__(self, "holes", tuple(holes))

    @property
    def area(self) -> float:
        return ring_area(self.outer) + sum(ring_area(h) for h in self.holes)

    @property
    def rings(self):
        return (self.outer,) + self.holes

    def bbox(self):
        lo = self.outer.min(axis=0)
        hi = self.outer.max(axis=0)
        return lo, hi

    def contains(self, px: float, py: float) -> bool:
        """Even-odd containment across all rings (holes excluded)."""
        inside = point_in_ring(px, py, self.outer)
        if not inside:
            return False
        for h in self.holes:
            if point_in_ring(px, py, h):
                return False
        return True

    def centroid(self) -> np.ndarray:
        total = 0.0
        acc = np.zeros(2)
        for ring in self.rings:
            a = ring_area(ring)
            acc += a * ring_centroid(ring)
            total += a
        if abs(total) < 1e-300:
            return self.outer.mean(axis=0)
        return acc / total

    def translated(self, dx: float, dy: float) -> "Polygon2":
        d = np.array([dx, dy])
        return Polygon2(self.outer + d, tuple(h + d for h in self.holes))

    def transformed(self, anchor, rotation: float = 0.0, scale: float = 1.0) -> "Polygon2":
        """Scale about the origin, rotate, then translate to anchor."""
        c, s = np.cos(rotation), np.sin(rotation)
        rot = np.array([[c, -s], [s, c]])
        a = np.asarray(anchor, dtype=np.float64)

        def tf(ring):
            return (scale * ring) @ rot.T + a

        return Polygon2(tf(self.outer), tuple(tf(h) for h in self.holes))

    def validate(self) -> None:
        """Full geometric validation for ingest paths (raises PolygonError)."""
        if ring_area(self.outer) <= 0:
            raise PolygonError("outer ring has non-positive area")
        for ring in self.rings:
            if not ring_is_simple(ring):
                raise PolygonError("self-intersecting ring")
        for h in self.holes:
            for px, py in h:
                if not point_in_ring(px, py, self.outer):
                    raise PolygonError("hole vertex outside the outer ring")
        for i in range(len(self.holes)):
            for j in range(i + 1, len(self.holes)):
                hi, hj = self.holes[i], self.holes[j]
                for a in range(len(hi)):
                    a2 = (a + 1) % len(hi)
                    for b in range(len(hj)):
                        b2 = (b + 1) % len(hj)
                        if _segments_touch(hi[a], hi[a2], hj[b], hj[b2]):
                            raise PolygonError("holes intersect each other")
                if point_in_ring(hj[0, 0], hj[0, 1], hi) or point_in_ring(
                    hi[0, 0], hi[0, 1], hj
                ):
                    raise PolygonError("nested hole rings")


def triangle_ring(a, b, c) -> np.ndarray:
    """CCW triangle ring from three points (reorders if CW)."""
    if orient2d_val(a[0], a[1], b[0], b[1], c[0], c[1]) < 0:
        a, b, c = a, c, b
    return np.array([a, b, c], dtype=np.float64)
