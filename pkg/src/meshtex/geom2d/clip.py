"""Polygon boolean operations via Greiner-Hormann linked traversal.

Degenerate incidences (vertex exactly on an edge, coincident vertices,
collinear edge overlap) are never resolved in place: the clip polygon is
translated by a deterministic offset (1e-12 doubling per retry) along
the canonical normal of the first incident edge and the operation rerun.
Canonical here means the edge's endpoints are taken in lexicographic
order, so two triangles sharing an edge derive the same normal and the
same intersection coordinates, which is what keeps stamped boundaries
crack-free across face borders.

Only simple rings enter the core; holes are handled at the polygon level
by sequential ring subtraction.
"""

from __future__ import annotations

import numpy as np

from .polygon import Polygon2, clean_ring, point_in_ring, ring_area
from .predicates import _ORIENT_BOUND, _orient2d_exact, on_segment

AREA_EPS = 1e-12


class ClipError(RuntimeError):
    """Boolean operation failed to converge after perturbation retries."""


class DegeneracyError(Exception):
    """Exact incidence between subject and clip; carries the subject edge."""

    def __init__(self, p, q):
        super().__init__("degenerate incidence on edge %s-%s" % (p, q))
        self.p = np.asarray(p, dtype=np.float64)
        self.q = np.asarray(q, dtype=np.float64)


def _canonical_edges(ring: np.ndarray):
    """Edge endpoints in ring order plus lexicographically sorted copies."""
    p = ring
    q = np.roll(ring, -1, axis=0)
    swap = (q[:, 0] < p[:, 0]) | ((q[:, 0] == p[:, 0]) & (q[:, 1] < p[:, 1]))
    cp = np.where(swap[:, None], q, p)
    cq = np.where(swap[:, None], p, q)
    return p, q, cp, cq, swap


def _orient_grid(ea, eb, pts):
    """Vectorized orient2d of each point against each edge (ea->eb).

    Returns (det, ambiguous) with det[i, j] the raw float determinant of
    edge i against point j and ambiguous flagging entries whose sign
    cannot be trusted at float precision.
    """
    ax = ea[:, None, 0]
    ay = ea[:, None, 1]
    bx = eb[:, None, 0]
    by = eb[:, None, 1]
    cx = pts[None, :, 0]
    cy = pts[None, :, 1]
    left = (ax - cx) * (by - cy)
    right = (ay - cy) * (bx - cx)
    det = left - right
    ambiguous = np.abs(det) <= _ORIENT_BOUND * (np.abs(left) + np.abs(right))
    return det, ambiguous


def _sign_grid(ea, eb, pts):
    det, amb = _orient_grid(ea, eb, pts)
    signs = np.sign(det).astype(np.int8)
    if amb.any():
        for i, j in zip(*np.nonzero(amb)):
            signs[i, j] = _orient2d_exact(
                ea[i, 0], ea[i, 1], eb[i, 0], eb[i, 1], pts[j, 0], pts[j, 1]
            )
    return det, signs


class _Node:
    __slots__ = ("pt", "next", "prev", "neighbour", "intersect", "entry", "visited")

    def __init__(self, pt, intersect=False):
        self.pt = (float(pt[0]), float(pt[1]))
        self.next = None
        self.prev = None
        self.neighbour = None
        self.intersect = intersect
        self.entry = False
        self.visited = False


def _build_list(ring, inters_per_edge):
    """Circular doubly linked list of ring vertices with intersection
    nodes spliced into each edge ordered by the alpha parameter."""
    nodes = []
    for i, pt in enumerate(ring):
        nodes.append(_Node(pt))
        for _, node in sorted(inters_per_edge.get(i, ()), key=lambda t: t[0]):
            nodes.append(node)
    n = len(nodes)
    for i, node in enumerate(nodes):
        node.next = nodes[(i + 1) % n]
        node.prev = nodes[(i - 1) % n]
    return nodes


def _find_crossings(subject: np.ndarray, clip: np.ndarray):
    """All proper edge crossings; raises DegeneracyError on any exact
    incidence that would make Greiner-Hormann traversal ambiguous."""
    sp, sq, scp, scq, s_swap = _canonical_edges(subject)
    cp_, cq_, ccp, ccq, c_swap = _canonical_edges(clip)

    # clip-edge line vs subject endpoints and vice versa, both canonical
    det_cs, sign_cs = _sign_grid(ccp, ccq, np.concatenate([scp, scq]))
    ns = len(subject)
    nc = len(clip)
    o1 = det_cs[:, :ns].T  # [subject edge, clip edge] orient of subject cp
    o2 = det_cs[:, ns:].T
    s1 = sign_cs[:, :ns].T
    s2 = sign_cs[:, ns:].T
    det_sc, sign_sc = _sign_grid(scp, scq, np.concatenate([ccp, ccq]))
    o3 = det_sc[:, :nc]  # [subject edge, clip edge] orient of clip cp
    o4 = det_sc[:, nc:]
    s3 = sign_sc[:, :nc]
    s4 = sign_sc[:, nc:]

    # exact incidence: a zero sign with the point inside the edge span
    for si, ci in zip(*np.nonzero((s1 == 0) | (s2 == 0))):
        for pt in (scp[si], scq[si]):
            if on_segment(ccp[ci, 0], ccp[ci, 1], ccq[ci, 0], ccq[ci, 1], pt[0], pt[1]):
                raise DegeneracyError(scp[si], scq[si])
    for si, ci in zip(*np.nonzero((s3 == 0) | (s4 == 0))):
        for pt in (ccp[ci], ccq[ci]):
            if on_segment(scp[si, 0], scp[si, 1], scq[si, 0], scq[si, 1], pt[0], pt[1]):
                raise DegeneracyError(scp[si], scq[si])

    crossing = (s1 * s2 < 0) & (s3 * s4 < 0)
    subj_edges: dict[int, list] = {}
    clip_edges: dict[int, list] = {}
    for si, ci in zip(*np.nonzero(crossing)):
        t = o1[si, ci] / (o1[si, ci] - o2[si, ci])
        pt = scp[si] + t * (scq[si] - scp[si])
        u = o3[si, ci] / (o3[si, ci] - o4[si, ci])
        alpha_s = 1.0 - t if s_swap[si] else t
        alpha_c = 1.0 - u if c_swap[ci] else u
        a = _Node(pt, intersect=True)
        b = _Node(pt, intersect=True)
        a.neighbour = b
        b.neighbour = a
        subj_edges.setdefault(int(si), []).append((alpha_s, a))
        clip_edges.setdefault(int(ci), []).append((alpha_c, b))
    for edges in (subj_edges, clip_edges):
        for lst in edges.values():
            alphas = sorted(a for a, _ in lst)
            for x, y in zip(alphas, alphas[1:]):
                if y - x < 1e-15:
                    raise DegeneracyError(subject[0], subject[1 % len(subject)])
    return subj_edges, clip_edges


def _mark_entries(nodes, other_ring, invert):
    start = next(n for n in nodes if not n.intersect)
    inside = point_in_ring(start.pt[0], start.pt[1], other_ring)
    node = start
    while True:
        if node.intersect:
            node.entry = (not inside) ^ invert
            inside = not inside
        node = node.next
        if node is start:
            break


def clip_rings(subject: np.ndarray, clip: np.ndarray, op: str):
    """Boolean op between two simple rings (subject CCW, clip CCW).

    Returns a list of result rings (forced CCW), or None when the rings
    have no proper crossings so the caller must resolve containment.
    Raises DegeneracyError on exact incidences.
    """
    subj_map, clip_map = _find_crossings(subject, clip)
    n_cross = sum(len(v) for v in subj_map.values())
    if n_cross == 0:
        return None
    if n_cross % 2 != 0:
        raise DegeneracyError(subject[0], subject[1])
    subj_nodes = _build_list(subject, subj_map)
    clip_nodes = _build_list(clip, clip_map)
    _mark_entries(subj_nodes, clip, invert=(op == "difference"))
    _mark_entries(clip_nodes, subject, invert=False)

    inters = [n for n in subj_nodes if n.intersect]
    results = []
    limit = 4 * (len(subj_nodes) + len(clip_nodes)) + 16
    for start in inters:
        if start.visited:
            continue
        ring = [start.pt]
        start.visited = True
        start.neighbour.visited = True
        cur = start
        guard = 0
        while True:
            guard += 1
            if guard > limit:
                raise ClipError("traversal failed to close a result ring")
            if cur.entry:
                while True:
                    cur = cur.next
                    if cur.intersect:
                        break
                    ring.append(cur.pt)
            else:
                while True:
                    cur = cur.prev
                    if cur.intersect:
                        break
                    ring.append(cur.pt)
            cur.visited = True
            cur.neighbour.visited = True
            if cur is start or cur.neighbour is start:
                break
            ring.append(cur.pt)
            cur = cur.neighbour
        arr = np.array(ring, dtype=np.float64)
        if len(arr) >= 3 and abs(ring_area(arr)) > AREA_EPS:
            if ring_area(arr) < 0:
                arr = arr[::-1].copy()
            results.append(arr)
    return results


def _canonical_normal(p, q):
    """Unit normal of the edge with endpoints taken in lexicographic order."""
    a, b = (p, q)
    if (q[0], q[1]) < (p[0], p[1]):
        a, b = q, p
    d = np.asarray(b, dtype=np.float64) - np.asarray(a, dtype=np.float64)
    ln = np.hypot(d[0], d[1])
    if ln < 1e-300:
        return np.array([0.0, 1.0])
    return np.array([-d[1], d[0]]) / ln


def _rings_identical(a: np.ndarray, b: np.ndarray) -> bool:
    if len(a) != len(b):
        return False
    matches = np.nonzero((b == a[0]).all(axis=1))[0]
    for off in matches:
        if np.array_equal(np.roll(b, -off, axis=0), a):
            return True
    return False


def _wrap_ring(ring: np.ndarray, holes=()) -> Polygon2 | None:
    """Polygon2 from a raw clip-output ring, or None if it is a sliver."""
    cleaned = clean_ring(np.asarray(ring, dtype=np.float64))
    if len(cleaned) < 3 or ring_area(cleaned) <= AREA_EPS:
        return None
    return Polygon2(cleaned, tuple(holes))


def _subtract_ring(poly: Polygon2, ring_ccw: np.ndarray):
    """poly minus the region bounded by a simple CCW ring.

    Existing holes must not cross the subtracted ring's boundary (they may
    be fully inside or fully outside it). Boolean ops maintain holes as
    pairwise non-crossing, so this only rejects out-of-contract inputs.
    """
    for h in poly.holes:
        if clip_rings(h[::-1], ring_ccw, "intersection") is not None:
            raise ClipError(
                "subtracted ring crosses an existing hole boundary"
            )
    out = clip_rings(poly.outer, ring_ccw, "difference")
    if out is None:
        rx, ry = ring_ccw[0]
        if point_in_ring(rx, ry, poly.outer):
            for h in poly.holes:
                if point_in_ring(rx, ry, h):
                    return [poly]  # swallowed by an existing hole
            kept = tuple(
                h for h in poly.holes
                if not point_in_ring(h[0, 0], h[0, 1], ring_ccw)
            )
            return [Polygon2(poly.outer, kept + (ring_ccw,))]
        ox, oy = poly.outer[0]
        if point_in_ring(ox, oy, ring_ccw):
            return []
        return [poly]
    pieces = []
    for r in out:
        holes = []
        for h in poly.holes:
            hx, hy = h[0]
            if point_in_ring(hx, hy, ring_ccw):
                continue  # hole swallowed by the subtracted region
            if point_in_ring(hx, hy, r):
                holes.append(h)
        piece = _wrap_ring(r, holes)
        if piece is not None:
            pieces.append(piece)
    return pieces


def _intersect_attempt(a: Polygon2, b: Polygon2):
    out = clip_rings(a.outer, b.outer, "intersection")
    if out is None:
        ax, ay = a.outer[0]
        bx, by = b.outer[0]
        if point_in_ring(ax, ay, b.outer):
            pieces = [Polygon2(a.outer)]
        elif point_in_ring(bx, by, a.outer):
            pieces = [Polygon2(b.outer)]
        else:
            return []
    else:
        pieces = [p for p in (_wrap_ring(r) for r in out) if p is not None]
    for hole in a.holes + b.holes:
        nxt = []
        for p in pieces:
            nxt.extend(_subtract_ring(p, hole[::-1]))
        pieces = nxt
    return [p for p in pieces if p.area > AREA_EPS]


def _difference_attempt(a: Polygon2, b: Polygon2):
    # a's own holes are carried through _subtract_ring
    pieces = _subtract_ring(a, b.outer)
    out = [p for p in pieces if p.area > AREA_EPS]
    # regions of a lying inside b's holes belong to the difference
    for hole in b.holes:
        out.extend(_intersect_attempt(a, Polygon2(hole[::-1])))
    return out


def _with_retries(a: Polygon2, b: Polygon2, attempt_fn):
    shifted = b
    for attempt in range(60):
        try:
            return attempt_fn(a, shifted)
        except DegeneracyError as exc:
            n = _canonical_normal(exc.p, exc.q)
            shifted = shifted.translated(*(n * (1e-12 * 2.0 ** attempt)))
    raise ClipError("degeneracy persisted after perturbation retries")


def intersect(a: Polygon2, b: Polygon2):
    """a  cap  b as a list of disjoint polygons (possibly with holes).

    Exact-equality inputs short-circuit to [a].  Degenerate incidences
    perturb b (never a) per the module rule; results then differ from
    the unperturbed truth by at most the accumulated offset, far below
    the 1e-9 relative tolerances used downstream.
    """
    if _rings_identical(a.outer, b.outer) and len(a.holes) == len(b.holes):
        if all(
            any(_rings_identical(ha, hb) for hb in b.holes) for ha in a.holes
        ):
            return [a]
    return _with_retries(a, b, _intersect_attempt)


def difference(a: Polygon2, b: Polygon2):
    """a minus b as a list of disjoint polygons (possibly with holes)."""
    return _with_retries(a, b, _difference_attempt)


def clear_incidences(element: Polygon2, edges: np.ndarray, max_tries: int = 64) -> Polygon2:
    """Translate element until it has no exact incidence with any edge.

    edges is (E, 2, 2): segment endpoint pairs (chart UV edges).  The
    translation is along the canonical normal of the first incident
    edge, 1e-12 doubled per retry.  Applying this once per placement
    against every chart edge guarantees each face's clip sees an
    already-clean element, so adjacent faces compute identical crossing
    coordinates on their shared edge.
    """
    if len(edges) == 0:
        return element
    ep = edges[:, 0]
    eq = edges[:, 1]
    swap = (eq[:, 0] < ep[:, 0]) | ((eq[:, 0] == ep[:, 0]) & (eq[:, 1] < ep[:, 1]))
    cp = np.where(swap[:, None], eq, ep)
    cq = np.where(swap[:, None], ep, eq)
    for attempt in range(max_tries):
        bad = _first_incidence(element, cp, cq)
        if bad is None:
            return element
        n = _canonical_normal(bad[0], bad[1])
        element = element.translated(*(n * (1e-12 * 2.0 ** attempt)))
    raise ClipError("element perturbation failed to clear chart incidences")


def _first_incidence(element: Polygon2, cp: np.ndarray, cq: np.ndarray):
    pts = np.concatenate(element.rings)
    lo = pts.min(axis=0) - 1e-6
    hi = pts.max(axis=0) + 1e-6
    emin = np.minimum(cp, cq)
    emax = np.maximum(cp, cq)
    near = (emin[:, 0] <= hi[0]) & (emax[:, 0] >= lo[0]) & (
        emin[:, 1] <= hi[1]
    ) & (emax[:, 1] >= lo[1])
    cp = cp[near]
    cq = cq[near]
    if len(cp) == 0:
        return None
    # element vertices exactly on a chart edge
    det, amb = _orient_grid(cp, cq, pts)
    sus = np.nonzero(amb | (det == 0.0))
    for ei, pi in zip(*sus):
        s = _orient2d_exact(cp[ei, 0], cp[ei, 1], cq[ei, 0], cq[ei, 1], pts[pi, 0], pts[pi, 1])
        if s == 0 and on_segment(
            cp[ei, 0], cp[ei, 1], cq[ei, 0], cq[ei, 1], pts[pi, 0], pts[pi, 1]
        ):
            return cp[ei], cq[ei]
    # chart vertices exactly on an element edge
    cpts = np.unique(np.concatenate([cp, cq]), axis=0)
    inb = (
        (cpts[:, 0] >= lo[0])
        & (cpts[:, 0] <= hi[0])
        & (cpts[:, 1] >= lo[1])
        & (cpts[:, 1] <= hi[1])
    )
    cpts = cpts[inb]
    if len(cpts):
        for ring in element.rings:
            ea = ring
            eb = np.roll(ring, -1, axis=0)
            det, amb = _orient_grid(ea, eb, cpts)
            sus = np.nonzero(amb | (det == 0.0))
            for ei, pi in zip(*sus):
                s = _orient2d_exact(
                    ea[ei, 0], ea[ei, 1], eb[ei, 0], eb[ei, 1], cpts[pi, 0], cpts[pi, 1]
                )
                if s == 0 and on_segment(
                    ea[ei, 0], ea[ei, 1], eb[ei, 0], eb[ei, 1], cpts[pi, 0], cpts[pi, 1]
                ):
                    return ea[ei], eb[ei]
    return None
