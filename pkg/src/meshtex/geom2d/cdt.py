"""Constrained Delaunay triangulation of a polygon with holes.

Bowyer-Watson incremental insertion inside a super-triangle, walk-based
point location, constraint recovery by channel removal + pseudo-polygon
retriangulation, even-odd region extraction, and a final legalization
pass over non-constrained edges.  All orientation/incircle decisions go
through the robust predicates, so the only tolerances in this module
are output filters, not branch conditions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .polygon import Polygon2, ring_area
from .predicates import incircle_sign, on_segment, orient2d_sign

log = logging.getLogger(__name__)

SLIVER_AREA = 1e-14


class TriangulationError(ValueError):
    """Constraint recovery failed or constraints are invalid."""


@dataclass(frozen=True)
class Triangulation2:
    points: np.ndarray
    triangles: np.ndarray
    constrained_edges: np.ndarray
    dropped_slivers: int = 0

    @property
    def area(self) -> float:
        p = self.points
        t = self.triangles
        a = p[t[:, 0]]
        b = p[t[:, 1]]
        c = p[t[:, 2]]
        return float(
            0.5
            * np.sum(
                (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
            )
        )

    def edge_set(self):
        es = set()
        for a, b, c in self.triangles:
            es.add((min(a, b), max(a, b)))
            es.add((min(b, c), max(b, c)))
            es.add((min(c, a), max(c, a)))
        return es


class _Mesh2:
    """Mutable triangulation state for the incremental build."""

    def __init__(self, pts):
        self.pts = pts  # list of (x, y) floats
        self.tris = {}  # tid -> (a, b, c) CCW
        self.edge = {}  # directed (u, v) -> tid
        self.next_tid = 0
        self.last_tid = None

    def add_tri(self, a, b, c):
        tid = self.next_tid
        self.next_tid += 1
        self.tris[tid] = (a, b, c)
        self.edge[(a, b)] = tid
        self.edge[(b, c)] = tid
        self.edge[(c, a)] = tid
        self.last_tid = tid
        return tid

    def remove_tri(self, tid):
        a, b, c = self.tris.pop(tid)
        for e in ((a, b), (b, c), (c, a)):
            if self.edge.get(e) == tid:
                del self.edge[e]

    def orient(self, i, j, k):
        p, q, r = self.pts[i], self.pts[j], self.pts[k]
        return orient2d_sign(p[0], p[1], q[0], q[1], r[0], r[1])

    def orient_pt(self, i, j, x, y):
        p, q = self.pts[i], self.pts[j]
        return orient2d_sign(p[0], p[1], q[0], q[1], x, y)

    def in_circumcircle(self, tri, x, y):
        a, b, c = tri
        pa, pb, pc = self.pts[a], self.pts[b], self.pts[c]
        return incircle_sign(pa[0], pa[1], pb[0], pb[1], pc[0], pc[1], x, y)

    def contains_pt(self, tid, x, y):
        a, b, c = self.tris[tid]
        return (
            self.orient_pt(a, b, x, y) >= 0
            and self.orient_pt(b, c, x, y) >= 0
            and self.orient_pt(c, a, x, y) >= 0
        )

    def locate(self, x, y):
        """Walk from the last triangle toward (x, y)."""
        if self.last_tid not in self.tris:
            self.last_tid = next(iter(self.tris))
        tid = self.last_tid
        seen = set()
        for _ in range(4 * len(self.tris) + 16):
            if tid in seen:
                break
            seen.add(tid)
            a, b, c = self.tris[tid]
            moved = False
            for (u, v) in ((a, b), (b, c), (c, a)):
                if self.orient_pt(u, v, x, y) < 0:
                    nxt = self.edge.get((v, u))
                    if nxt is None:
                        break
                    tid = nxt
                    moved = True
                    break
            if not moved:
                return tid
        for tid, _ in self.tris.items():  # fallback linear scan
            if self.contains_pt(tid, x, y):
                return tid
        raise TriangulationError("point location failed")

    def insert_point(self, idx):
        x, y = self.pts[idx]
        seed = self.locate(x, y)
        bad = {seed}
        # seed may be one of two triangles when the point sits on an edge
        a, b, c = self.tris[seed]
        for (u, v) in ((a, b), (b, c), (c, a)):
            if self.orient_pt(u, v, x, y) == 0:
                twin = self.edge.get((v, u))
                if twin is not None:
                    bad.add(twin)
        frontier = list(bad)
        while frontier:
            tid = frontier.pop()
            a, b, c = self.tris[tid]
            for (u, v) in ((a, b), (b, c), (c, a)):
                nxt = self.edge.get((v, u))
                if nxt is None or nxt in bad:
                    continue
                if self.in_circumcircle(self.tris[nxt], x, y) > 0:
                    bad.add(nxt)
                    frontier.append(nxt)
        boundary = []
        for tid in bad:
            a, b, c = self.tris[tid]
            for (u, v) in ((a, b), (b, c), (c, a)):
                nxt = self.edge.get((v, u))
                if nxt is None or nxt not in bad:
                    boundary.append((u, v))
        for tid in list(bad):
            self.remove_tri(tid)
        for (u, v) in boundary:
            self.add_tri(u, v, idx)


def _split_at_collinear(mesh: _Mesh2, u: int, v: int, active: set):
    """Indices of points lying exactly on segment (u, v), ordered u -> v."""
    pu = mesh.pts[u]
    pv = mesh.pts[v]
    hits = []
    for i in active:
        if i == u or i == v:
            continue
        p = mesh.pts[i]
        if on_segment(pu[0], pu[1], pv[0], pv[1], p[0], p[1]):
            t = (p[0] - pu[0]) * (pv[0] - pu[0]) + (p[1] - pu[1]) * (pv[1] - pu[1])
            hits.append((t, i))
    hits.sort()
    chain = [u] + [i for _, i in hits] + [v]
    return list(zip(chain, chain[1:]))


def _recover_edge(mesh: _Mesh2, u: int, v: int, constrained: set):
    if (u, v) in mesh.edge or (v, u) in mesh.edge:
        return
    # march from u to v collecting the channel of crossed triangles
    pu = mesh.pts[u]
    pv = mesh.pts[v]

    def side_of_segment(w):
        pw = mesh.pts[w]
        return orient2d_sign(pu[0], pu[1], pv[0], pv[1], pw[0], pw[1])

    start = None
    for (a, b), tid in mesh.edge.items():
        if a != u:
            continue
        tri = mesh.tris[tid]
        i = tri.index(u)
        p = tri[(i + 1) % 3]
        q = tri[(i + 2) % 3]
        # v's direction lies strictly inside the wedge p -> q around u
        if (
            mesh.orient_pt(u, p, pv[0], pv[1]) > 0
            and mesh.orient_pt(u, q, pv[0], pv[1]) < 0
        ):
            start = (tid, p, q)
            break
    if start is None:
        raise TriangulationError("constraint recovery: no exit triangle at %d" % u)
    cur, p, q = start
    # p is right of u->v, q left (CCW triangle, v inside the wedge)
    left = [q]
    right = [p]
    channel = [cur]
    guard = 0
    while True:
        guard += 1
        if guard > 4 * len(mesh.tris) + 16:
            raise TriangulationError("constraint recovery walk did not terminate")
        if (min(p, q), max(p, q)) in constrained:
            raise TriangulationError("constraint crosses an existing constraint")
        t1 = mesh.edge.get((p, q))
        t2 = mesh.edge.get((q, p))
        nxt = t2 if t1 == cur else t1
        if nxt is None:
            raise TriangulationError("constraint walk left the triangulation")
        channel.append(nxt)
        tri = mesh.tris[nxt]
        w = [x for x in tri if x != p and x != q][0]
        if w == v:
            break
        sw = side_of_segment(w)
        if sw > 0:
            left.append(w)
            q = w
        elif sw < 0:
            right.append(w)
            p = w
        else:
            raise TriangulationError("constraint hits a vertex mid-segment")
        cur = nxt
    for tid in set(channel):
        mesh.remove_tri(tid)
    # left chain sits CCW of u->v; right chain is filled against v->u
    _fill_pseudo(mesh, u, v, left)
    _fill_pseudo(mesh, v, u, right[::-1])


def _fill_pseudo(mesh: _Mesh2, a: int, b: int, side: list):
    """Retriangulate the pseudo-polygon bounded by edge (a, b) and the
    ordered vertex chain `side` lying on the CCW side of a->b.

    The apex is the chain vertex whose circumcircle with the base is
    empty of other chain vertices; vertices exactly collinear with the
    base are never apexes (they resolve in deeper recursions).
    """
    if not side:
        return
    pa, pb = mesh.pts[a], mesh.pts[b]
    c = None
    for x in side:
        if mesh.orient(a, b, x) <= 0:
            continue
        if c is None:
            c = x
            continue
        pc = mesh.pts[c]
        px = mesh.pts[x]
        if incircle_sign(pa[0], pa[1], pb[0], pb[1], pc[0], pc[1], px[0], px[1]) > 0:
            c = x
    if c is None:
        return  # chain degenerate against this base
    i = side.index(c)
    _fill_pseudo(mesh, a, c, side[:i])
    _fill_pseudo(mesh, c, b, side[i + 1:])
    mesh.add_tri(a, b, c)


def _legalize(points, triangles, constrained: set):
    """Flip non-constrained edges violating the empty-circumcircle test.

    Each pass flips any number of edges whose two triangles are still
    untouched this pass, then rebuilds adjacency; terminates when a full
    pass makes no flips.
    """
    tris = [tuple(t) for t in triangles]
    for _ in range(200):
        edge2 = {}
        for ti, (a, b, c) in enumerate(tris):
            for (u, v) in ((a, b), (b, c), (c, a)):
                edge2[(u, v)] = ti
        dirty: set = set()
        flipped = False
        for (u, v), ti in list(edge2.items()):
            if u > v or (u, v) in constrained:
                continue
            tj = edge2.get((v, u))
            if tj is None or ti in dirty or tj in dirty:
                continue
            w = [x for x in tris[ti] if x != u and x != v][0]
            x = [y for y in tris[tj] if y != u and y != v][0]
            pu, pv, pw, px = (points[i] for i in (u, v, w, x))
            if orient2d_sign(pu[0], pu[1], pv[0], pv[1], pw[0], pw[1]) <= 0:
                continue
            if (
                incircle_sign(pu[0], pu[1], pv[0], pv[1], pw[0], pw[1], px[0], px[1])
                > 0
            ):
                # flip to diagonal (w, x): requires the quad to be convex
                if (
                    orient2d_sign(pw[0], pw[1], px[0], px[1], pu[0], pu[1])
                    * orient2d_sign(pw[0], pw[1], px[0], px[1], pv[0], pv[1])
                    < 0
                ):
                    tris[ti] = (u, x, w)
                    tris[tj] = (x, v, w)
                    dirty.add(ti)
                    dirty.add(tj)
                    flipped = True
        if not flipped:
            break
    else:
        log.warning("legalization pass budget exhausted")
    return tris


def cdt(region: Polygon2, extra_constraints=()) -> Triangulation2:
    """Triangulate the region; ring edges and extra segments become
    constrained edges of the output."""
    pts: list = []
    index: dict = {}

    def add_pt(x, y):
        key = (float(x), float(y))
        got = index.get(key)
        if got is not None:
            return got
        index[key] = len(pts)
        pts.append(key)
        return index[key]

    ring_edges = []
    for ring in region.rings:
        ids = [add_pt(x, y) for x, y in ring]
        for i in range(len(ids)):
            a, b = ids[i], ids[(i + 1) % len(ids)]
            if a != b:
                ring_edges.append((a, b))
    extra_edges = []
    for (p, q) in extra_constraints:
        a = add_pt(p[0], p[1])
        b = add_pt(q[0], q[1])
        if a != b:
            extra_edges.append((a, b))

    n_real = len(pts)
    if n_real < 3:
        raise TriangulationError("region has fewer than 3 distinct points")
    arr = np.array(pts)
    lo = arr.min(axis=0)
    hi = arr.max(axis=0)
    span = max(hi[0] - lo[0], hi[1] - lo[1], 1e-9)
    cx, cy = (lo + hi) / 2.0
    s0 = add_pt(cx - 16 * span, cy - 10 * span)
    s1 = add_pt(cx + 16 * span, cy - 10 * span)
    s2 = add_pt(cx, cy + 16 * span)

    mesh = _Mesh2(pts)
    mesh.add_tri(s0, s1, s2)
    for i in range(n_real):
        mesh.insert_point(i)

    active = set(range(n_real))
    constrained: set = set()
    segments = []
    for (a, b) in ring_edges + extra_edges:
        for (u, v) in _split_at_collinear(mesh, a, b, active):
            seg = (min(u, v), max(u, v))
            if seg not in constrained:
                constrained.add(seg)
                segments.append(seg)
    for (u, v) in segments:
        _recover_edge(mesh, u, v, constrained)

    # drop super-triangle incidence, keep triangles inside the region
    kept = []
    for (a, b, c) in mesh.tris.values():
        if a >= n_real or b >= n_real or c >= n_real:
            continue
        gx = (pts[a][0] + pts[b][0] + pts[c][0]) / 3.0
        gy = (pts[a][1] + pts[b][1] + pts[c][1]) / 3.0
        if region.contains(gx, gy):
            kept.append((a, b, c))
    kept = _legalize(arr, kept, constrained)

    dropped = 0
    final = []
    for (a, b, c) in kept:
        area = 0.5 * (
            (pts[b][0] - pts[a][0]) * (pts[c][1] - pts[a][1])
            - (pts[b][1] - pts[a][1]) * (pts[c][0] - pts[a][0])
        )
        if abs(area) < SLIVER_AREA:
            dropped += 1
            continue
        final.append((a, b, c) if area > 0 else (a, c, b))
    if dropped:
        log.warning("cdt dropped %d sliver triangles (area < %g)", dropped, SLIVER_AREA)

    tri_arr = np.array(final, dtype=np.int64) if final else np.zeros((0, 3), np.int64)
    edge_present = set()
    for (a, b, c) in final:
        for (u, v) in ((a, b), (b, c), (c, a)):
            edge_present.add((min(u, v), max(u, v)))
    missing = [seg for seg in segments if seg not in edge_present]
    if missing:
        raise TriangulationError(
            "constraint recovery incomplete: %d edges missing" % len(missing)
        )
    cons = (
        np.array(sorted(constrained), dtype=np.int64)
        if constrained
        else np.zeros((0, 2), np.int64)
    )
    return Triangulation2(arr[:n_real], tri_arr, cons, dropped)
