"""Flattening an open mesh into a 2D chart and mapping between UV and 3D.

The chart is produced by an as-rigid-as-possible (local/global) solve:
each face carries an isometric copy of its 3D triangle, the local phase
fits a best rotation per face, and the global phase solves a cotangent
Laplace system for the vertex UVs.  Closed meshes are first cut open
along seams connecting high-distortion vertices so the result is a
topological disk.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from . import _kernels as kernels
from .mesh import TriMesh, edge_use_table, face_areas
from .segmentation import angle_deficits
from .topology import vertex_components, vertex_faces

SEAM_TERMINALS = 4
ARAP_MAX_ITERATIONS = 100
ARAP_TOLERANCE = 1e-7
COT_WEIGHT_FLOOR = 1e-8
BARY_EPS = 1e-9


class ChartError(ValueError):
    """Chart construction or lookup failed."""


class FlipError(ChartError):
    """Parameterization finished with inverted UV triangles."""

    def __init__(self, flip_count: int):
        super().__init__(
            "parameterization finished with %d flipped triangles" % flip_count
        )
        self.flip_count = flip_count


@dataclass(frozen=True)
class UVChart:
    """Per-face UV triangle chart of a mesh, in millimeters.

    ``uv[f, k]`` is the 2D image of corner ``k`` of face ``f``.  Faces
    keep the index order of the mesh they were built from; seam_edges
    lists the original-mesh edges (sorted vertex pairs) that were split
    open before flattening.
    """

    uv: np.ndarray
    seam_edges: frozenset
    area_distortion: np.ndarray
    energy_history: tuple = ()
    _grid: dict = field(
        default=None, repr=False, compare=False
    )  # type: ignore[assignment]

    def __post_init__(self):
        uv = np.ascontiguousarray(np.asarray(self.uv, dtype=np.float64))
        if uv.ndim != 3 or uv.shape[1:] != (3, 2):
            raise ChartError("uv must be (faces, 3, 2)")
        dist = np.ascontiguousarray(
            np.asarray(self.area_distortion, dtype=np.float64)
        )
        if dist.shape != (len(uv),):
            raise ChartError("area_distortion must have one entry per face")
        uv.setflags(write=False)
        dist.setflags(write=False)
        object.__setattr__(self, "uv", uv)
        object.__setattr__(self, "area_distortion", dist)
        object.__setattr__(self, "seam_edges", frozenset(self.seam_edges))
        object.__setattr__(self, "_grid", None)

    @property
    def n_faces(self) -> int:
        return len(self.uv)

    @property
    def max_area_distortion(self) -> float:
        return float(self.area_distortion.max()) if len(self.uv) else 0.0


# --------------------------------------------------------------- seam cutting

def _euler_characteristic(mesh: TriMesh) -> int:
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[mesh.faces.reshape(-1)] = True
    edges, _, _ = edge_use_table(mesh.faces)
    return int(used.sum()) - len(edges) + mesh.n_faces


def _edge_graph(mesh: TriMesh) -> sp.csr_matrix:
    edges, _, _ = edge_use_table(mesh.faces)
    w = np.linalg.norm(
        mesh.positions[edges[:, 0]] - mesh.positions[edges[:, 1]], axis=1
    )
    n = mesh.n_vertices
    g = sp.coo_matrix(
        (np.concatenate([w, w]),
         (np.concatenate([edges[:, 0], edges[:, 1]]),
          np.concatenate([edges[:, 1], edges[:, 0]]))),
        shape=(n, n),
    )
    return g.tocsr()


def _shortest_path_edges(graph, source: int, targets) -> tuple:
    """Edge keys of the shortest path from source to the nearest target."""
    dist, pred = csgraph.dijkstra(
        graph, indices=source, return_predecessors=True
    )
    targets = np.asarray(sorted(targets), dtype=np.int64)
    finite = np.isfinite(dist[targets])
    if not finite.any():
        raise ChartError("mesh is disconnected")
    t = int(targets[finite][np.argmin(dist[targets][finite])])
    path = [t]
    while path[-1] != source:
        p = int(pred[path[-1]])
        if p < 0:
            raise ChartError("mesh is disconnected")
        path.append(p)
    keys = set()
    for a, b in zip(path[:-1], path[1:]):
        keys.add((min(a, b), max(a, b)))
    return keys, path


def _terminal_vertices(mesh: TriMesh, k: int) -> list:
    """High-curvature seam terminals, spread by farthest-point sampling.

    Raw per-vertex angle deficits are used rather than a ring-smoothed
    field: smoothing smears a concentrated cone point (e.g. an apex)
    into a plateau, and the seam tree can then connect plateau vertices
    around the singularity while leaving it interior, which forces the
    flattening to fold.
    """
    d = np.abs(angle_deficits(mesh))
    first = int(np.argmax(d))
    pool = np.flatnonzero(d >= 0.5 * d[first])
    if len(pool) < 2:
        pool = np.arange(mesh.n_vertices)
    graph = _edge_graph(mesh)
    chosen = [first]
    while len(chosen) < min(k, len(pool)):
        dist = csgraph.dijkstra(graph, indices=chosen, min_only=True)
        dist = dist[pool]
        dist[~np.isfinite(dist)] = -1.0
        far = int(pool[np.argmax(dist)])
        if far in chosen or dist.max() <= 0.0:
            break
        chosen.append(far)
    return chosen


def _terminal_tree_seams(mesh: TriMesh) -> set:
    """Seam edges: shortest-path tree connecting distortion maxima."""
    terminals = _terminal_vertices(mesh, SEAM_TERMINALS)
    graph = _edge_graph(mesh)
    tree_vertices = {terminals[0]}
    seams: set = set()
    for t in terminals[1:]:
        if t in tree_vertices:
            continue
        keys, path = _shortest_path_edges(graph, t, tree_vertices)
        seams |= keys
        tree_vertices |= set(path)
    if len(seams) == 1:
        # A single cut edge has no interior vertex to split and therefore
        # opens nothing; extend the path by the shortest edge off one end.
        (a, b), = seams
        row = graph.getrow(a)
        best = None
        for j, w in zip(row.indices, row.data):
            if j != b and (best is None or (w, j) < best):
                best = (w, int(j))
        if best is None:
            raise ChartError("cannot extend degenerate seam")
        seams.add((min(a, best[1]), max(a, best[1])))
    return seams


def _genus_cut_seams(mesh: TriMesh) -> set:
    """Cut graph of a closed surface: edges missed by a dual spanning tree,
    pruned of dangling chains.  Empty for genus zero."""
    edges, _, _ = edge_use_table(mesh.faces)
    key_to_idx = {(int(a), int(b)): i for i, (a, b) in enumerate(edges)}
    edge_faces: dict = {}
    for fi, tri in enumerate(mesh.faces):
        for k in range(3):
            a, b = int(tri[k]), int(tri[(k + 1) % 3])
            edge_faces.setdefault((min(a, b), max(a, b)), []).append(fi)
    crossed = np.zeros(len(edges), dtype=bool)
    seen = np.zeros(mesh.n_faces, dtype=bool)
    seen[0] = True
    queue = [0]
    adj: dict = {}
    for key, fs in edge_faces.items():
        if len(fs) == 2:
            adj.setdefault(fs[0], []).append((fs[1], key))
            adj.setdefault(fs[1], []).append((fs[0], key))
    while queue:
        f = queue.pop()
        for g, key in sorted(adj.get(f, [])):
            if not seen[g]:
                seen[g] = True
                crossed[key_to_idx[key]] = True
                queue.append(g)
    cut = {tuple(int(v) for v in edges[i]) for i in np.flatnonzero(~crossed)}
    # prune chains hanging off the cycles
    while True:
        deg: dict = {}
        for a, b in cut:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        drop = {e for e in cut if deg[e[0]] == 1 or deg[e[1]] == 1}
        if not drop:
            break
        cut -= drop
    return cut


def _boundary_loops(mesh: TriMesh) -> list:
    """Vertex loops of the mesh boundary, one list per loop."""
    edges, counts, _ = edge_use_table(mesh.faces)
    boundary = {tuple(int(v) for v in e) for e in edges[counts == 1]}
    if not boundary:
        return []
    succ: dict = {}
    for fi, tri in enumerate(mesh.faces):
        for k in range(3):
            a, b = int(tri[k]), int(tri[(k + 1) % 3])
            if (min(a, b), max(a, b)) in boundary:
                if a in succ:
                    raise ChartError("non-manifold boundary at vertex %d" % a)
                succ[a] = b
    loops = []
    remaining = set(succ)
    while remaining:
        start = min(remaining)
        loop = [start]
        remaining.discard(start)
        cur = succ.get(start)
        while cur is not None and cur != start:
            loop.append(cur)
            remaining.discard(cur)
            cur = succ.get(cur)
        if cur is None:
            raise ChartError("open boundary chain at vertex %d" % loop[-1])
        loops.append(loop)
    return loops


def _cut_along(mesh: TriMesh, seams: set) -> tuple:
    """Split the mesh open along the given edge keys.

    Every seam vertex is copied once per fan wedge (contiguous run of its
    incident faces not crossing a seam edge); faces keep their order.
    Returns (open mesh, origin) where origin[i] is the input-mesh vertex
    each output vertex derives from.
    """
    faces = mesh.faces.copy()
    vfaces = vertex_faces(mesh)
    new_positions = [mesh.positions]
    origin = list(range(mesh.n_vertices))
    next_index = mesh.n_vertices
    seam_vertices = sorted({v for e in seams for v in e})
    for v in seam_vertices:
        fs = sorted(int(f) for f in vfaces[v])
        # two incident faces stay joined when they share a non-seam edge at v
        edge_of: dict = {}
        for f in fs:
            tri = mesh.faces[f]
            for k in range(3):
                a, b = int(tri[k]), int(tri[(k + 1) % 3])
                if a == v or b == v:
                    key = (min(a, b), max(a, b))
                    if key not in seams:
                        edge_of.setdefault(key, []).append(f)
        join: dict = {f: [] for f in fs}
        for pair in edge_of.values():
            if len(pair) == 2:
                join[pair[0]].append(pair[1])
                join[pair[1]].append(pair[0])
        wedges = []
        unvisited = set(fs)
        while unvisited:
            seed = min(unvisited)
            comp = [seed]
            unvisited.discard(seed)
            queue = [seed]
            while queue:
                f = queue.pop()
                for g in join[f]:
                    if g in unvisited:
                        unvisited.discard(g)
                        comp.append(g)
                        queue.append(g)
            wedges.append(sorted(comp))
        wedges.sort(key=lambda c: c[0])
        for comp in wedges[1:]:
            new_positions.append(mesh.positions[v][None, :])
            origin.append(v)
            for f in comp:
                faces[f][mesh.faces[f] == v] = next_index
            next_index += 1
    opened = TriMesh(np.vstack(new_positions), faces, mesh.face_tags)
    return opened, np.array(origin, dtype=np.int64)


def cut_seams(mesh: TriMesh) -> TriMesh:
    """Open the mesh into a topological disk along high-distortion seams."""
    opened, _ = cut_seams_with_edges(mesh)
    return opened


def cut_seams_with_edges(mesh: TriMesh) -> tuple:
    """Like :func:`cut_seams` but also returns the split edge keys."""
    if mesh.n_faces == 0:
        raise ChartError("cannot cut an empty mesh")
    labels = vertex_components(mesh)
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[mesh.faces.reshape(-1)] = True
    if len(set(labels[used].tolist())) != 1:
        raise ChartError("seam cutting requires a connected mesh")

    chi = _euler_characteristic(mesh)
    loops = _boundary_loops(mesh)
    if chi == 1 and len(loops) == 1:
        return mesh, frozenset()

    seams: set = set()  # reported in original-mesh vertex indices
    work = mesh
    to_original = np.arange(mesh.n_vertices)
    if not loops:
        genus_cut = _genus_cut_seams(work)
        cut = genus_cut if genus_cut else _terminal_tree_seams(work)
        seams |= cut
        work, org = _cut_along(work, cut)
        to_original = to_original[org]
        chi = _euler_characteristic(work)
        loops = _boundary_loops(work)
    while len(loops) > 1:
        # connect two boundary loops by the shortest path and slit it open
        graph = _edge_graph(work)
        targets = set().union(*[set(l) for l in loops[1:]])
        keys, _ = _shortest_path_edges(graph, loops[0][0], targets)
        for a, b in keys:
            oa, ob = int(to_original[a]), int(to_original[b])
            seams.add((min(oa, ob), max(oa, ob)))
        work, org = _cut_along(work, keys)
        to_original = to_original[org]
        chi = _euler_characteristic(work)
        loops = _boundary_loops(work)
    if chi != 1 or len(loops) != 1:
        raise ChartError(
            "seam cutting did not produce a disk (Euler characteristic %d, "
            "%d boundary loops)" % (chi, len(loops))
        )
    return work, frozenset(seams)


# ------------------------------------------------------------ parameterization

def _reference_frames(mesh: TriMesh):
    """Isometric 2D copy of each 3D triangle and its cotangent weights.

    Returns (eloc, cot): eloc[f, k] is the 2D edge k->k+1 of face f laid
    flat, cot[f, k] the weight of that edge (cotangent of the opposite
    corner, floored for stability).
    """
    p = mesh.positions[mesh.faces]
    e0 = p[:, 1] - p[:, 0]
    e1 = p[:, 2] - p[:, 0]
    l01 = np.linalg.norm(e0, axis=1)
    l02 = np.linalg.norm(e1, axis=1)
    dot = np.einsum("ij,ij->i", e0, e1)
    safe = np.maximum(l01 * l02, 1e-300)
    cos0 = np.clip(dot / safe, -1.0, 1.0)
    sin0 = np.sqrt(np.maximum(0.0, 1.0 - cos0 * cos0))
    x0 = np.zeros((len(p), 2))
    x1 = np.stack([l01, np.zeros(len(p))], axis=1)
    x2 = np.stack([l02 * cos0, l02 * sin0], axis=1)
    eloc = np.stack([x1 - x0, x2 - x1, x0 - x2], axis=1)

    angles = kernels.corner_angles(mesh.positions, mesh.faces)
    sin = np.maximum(np.sin(angles), 1e-12)
    cot_corner = np.cos(angles) / sin
    # weight of edge k->k+1 is the cotangent at the opposite corner k+2
    cot = np.stack(
        [cot_corner[:, 2], cot_corner[:, 0], cot_corner[:, 1]], axis=1
    )
    return eloc, np.maximum(cot, COT_WEIGHT_FLOOR)


def _cot_matrix(faces: np.ndarray, cot: np.ndarray, n: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for k in range(3):
        a = faces[:, k]
        b = faces[:, (k + 1) % 3]
        w = cot[:, k]
        rows += [a, b, a, b]
        cols += [a, b, b, a]
        vals += [w, w, -w, -w]
    m = sp.coo_matrix(
        (np.concatenate(vals),
         (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return m.tocsr()


def _tutte_embedding(mesh: TriMesh, boundary: list) -> np.ndarray:
    """Flip-free start: boundary on a circle, interior at uniform averages."""
    n = mesh.n_vertices
    pos = mesh.positions
    k = np.argmin(boundary)
    loop = boundary[k:] + boundary[:k]
    pts = pos[loop]
    seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    total = float(seg.sum())
    if total <= 0.0:
        raise ChartError("degenerate boundary loop")
    arc = np.concatenate([[0.0], np.cumsum(seg[:-1])]) * (2.0 * np.pi / total)
    radius = total / (2.0 * np.pi)
    uv = np.zeros((n, 2))
    uv[loop, 0] = radius * np.cos(arc)
    uv[loop, 1] = radius * np.sin(arc)

    on_boundary = np.zeros(n, dtype=bool)
    on_boundary[loop] = True
    pairs = np.concatenate(
        [mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]], mesh.faces[:, [2, 0]]]
    )
    pairs = np.unique(np.sort(pairs, axis=1), axis=0)
    both = np.concatenate([pairs, pairs[:, ::-1]])
    ones = np.ones(len(both))
    adj = sp.coo_matrix((ones, (both[:, 0], both[:, 1])), shape=(n, n)).tocsr()
    deg = np.asarray(adj.sum(axis=1)).reshape(-1)
    interior = np.flatnonzero(~on_boundary & (deg > 0))
    if len(interior):
        lap_ii = sp.diags(deg[interior]) - adj[interior][:, interior]
        rhs = adj[interior][:, np.flatnonzero(on_boundary)] @ uv[on_boundary]
        fac = spla.splu(lap_ii.tocsc())
        uv[interior, 0] = fac.solve(rhs[:, 0])
        uv[interior, 1] = fac.solve(rhs[:, 1])
    return uv


def arap_parameterize(
    mesh: TriMesh,
    *,
    seam_edges: frozenset = frozenset(),
    max_iterations: int = ARAP_MAX_ITERATIONS,
    tolerance: float = ARAP_TOLERANCE,
) -> UVChart:
    """Flatten an open disk mesh by the local/global rigidity solve."""
    if mesh.n_faces == 0:
        raise ChartError("cannot parameterize an empty mesh")
    labels = vertex_components(mesh)
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[mesh.faces.reshape(-1)] = True
    if not used.all():
        raise ChartError("parameterization requires every vertex to be used")
    if len(set(labels[used].tolist())) != 1:
        raise ChartError("parameterization requires a connected mesh")
    loops = _boundary_loops(mesh)
    if _euler_characteristic(mesh) != 1 or len(loops) != 1:
        raise ChartError(
            "parameterization requires an open disk (cut_seams first)"
        )

    eloc, cot = _reference_frames(mesh)
    uv = _tutte_embedding(mesh, loops[0])

    n = mesh.n_vertices
    lap = _cot_matrix(mesh.faces, cot, n)
    pin = 0
    keep = np.arange(1, n)
    solver = spla.splu(lap[keep][:, keep].tocsc())
    lap_pin = lap[keep][:, [pin]].toarray().reshape(-1)
    pin_uv = uv[pin].copy()

    history = []
    prev_uv = uv.copy()
    prev_energy = np.inf
    for _ in range(max_iterations):
        rot, energy = kernels.arap_local(uv, mesh.faces, eloc, cot)
        if energy > prev_energy * (1.0 + 1e-12) + 1e-15:
            uv = prev_uv  # numerical stall: keep the last good layout
            break
        history.append(float(energy))
        converged = (
            np.isfinite(prev_energy)
            and prev_energy - energy <= tolerance * max(prev_energy, 1e-300)
        )
        prev_energy = energy
        prev_uv = uv.copy()
        if converged:
            break
        rhs = kernels.arap_rhs(rot, mesh.faces, eloc, cot, n)
        red = rhs[keep] - lap_pin[:, None] * pin_uv[None, :]
        sol = np.column_stack(
            [solver.solve(red[:, 0]), solver.solve(red[:, 1])]
        )
        uv = uv.copy()
        uv[keep] = sol
        uv[pin] = pin_uv

    tri_uv = uv[mesh.faces]
    signed = 0.5 * (
        (tri_uv[:, 1, 0] - tri_uv[:, 0, 0])
        * (tri_uv[:, 2, 1] - tri_uv[:, 0, 1])
        - (tri_uv[:, 2, 0] - tri_uv[:, 0, 0])
        * (tri_uv[:, 1, 1] - tri_uv[:, 0, 1])
    )
    if signed.sum() < 0.0:
        uv = uv * np.array([1.0, -1.0])
        tri_uv = uv[mesh.faces]
        signed = -signed
    flips = int((signed <= 0.0).sum())
    if flips:
        raise FlipError(flips)

    area3d = face_areas(mesh)
    total3d = float(area3d.sum())
    total_uv = float(signed.sum())
    if total_uv <= 0.0:
        raise ChartError("degenerate chart area")
    scale = np.sqrt(total3d / total_uv)
    tri_uv = tri_uv * scale
    signed = signed * scale * scale

    ratio = signed / np.maximum(area3d, 1e-300)
    return UVChart(
        uv=tri_uv,
        seam_edges=seam_edges,
        area_distortion=np.abs(ratio - 1.0),
        energy_history=tuple(history),
    )


def build_chart(mesh: TriMesh) -> UVChart:
    """Cut the mesh open if needed and flatten it: the one-call pipeline."""
    opened, seams = cut_seams_with_edges(mesh)
    return arap_parameterize(opened, seam_edges=seams)


# ------------------------------------------------------------- uv <-> 3d

def barycentric_in_face(chart: UVChart, face: int, p) -> np.ndarray:
    """Barycentric coordinates of 2D point p in the face's UV triangle."""
    tri = chart.uv[face]
    a, b, c = tri[0], tri[1], tri[2]
    den = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
    if den == 0.0:
        raise ChartError("degenerate UV triangle %d" % face)
    l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / den
    l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / den
    return np.array([1.0 - l1 - l2, l1, l2])


def uv_to_3d(chart: UVChart, mesh: TriMesh, face: int, p) -> np.ndarray:
    """Map a UV point inside the given face back onto the surface."""
    if not 0 <= face < chart.n_faces:
        raise ChartError("face index out of range")
    lam = barycentric_in_face(chart, face, np.asarray(p, dtype=np.float64))
    if lam.min() < -BARY_EPS or lam.max() > 1.0 + BARY_EPS:
        raise ChartError(
            "uv point (%g, %g) lies outside face %d" % (p[0], p[1], face)
        )
    corners = mesh.positions[mesh.faces[face]]
    return lam @ corners


def _chart_grid(chart: UVChart) -> dict:
    grid = chart._grid
    if grid is not None:
        return grid
    tri = chart.uv
    lo = tri.min(axis=(0, 1))
    hi = tri.max(axis=(0, 1))
    span = np.maximum(hi - lo, 1e-12)
    n = max(1, min(256, int(np.ceil(np.sqrt(max(1, len(tri)))))))
    cell = span / n
    fmin = np.floor((tri.min(axis=1) - lo) / cell).astype(np.int64)
    fmax = np.floor((tri.max(axis=1) - lo) / cell).astype(np.int64)
    fmin = np.clip(fmin, 0, n - 1)
    fmax = np.clip(fmax, 0, n - 1)
    cells: dict = {}
    for f in range(len(tri)):
        for cy in range(fmin[f, 1], fmax[f, 1] + 1):
            for cx in range(fmin[f, 0], fmax[f, 0] + 1):
                cells.setdefault((cx, cy), []).append(f)
    packed = {
        key: np.array(v, dtype=np.int64) for key, v in cells.items()
    }
    grid = {"lo": lo, "cell": cell, "n": n, "cells": packed}
    object.__setattr__(chart, "_grid", grid)
    return grid


def locate_many(chart: UVChart, points) -> np.ndarray:
    """Containing face per query point (-1 when outside the chart)."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if chart.n_faces == 0 or len(points) == 0:
        return np.full(len(points), -1, dtype=np.int64)
    grid = _chart_grid(chart)
    # clamp boundary queries into the grid; the kernel still rejects points
    # whose candidate triangles do not actually contain them
    idx = np.floor((points - grid["lo"]) / grid["cell"]).astype(np.int64)
    idx = np.clip(idx, 0, grid["n"] - 1)
    empty = np.empty(0, dtype=np.int64)
    cand_lists = []
    offsets = np.zeros(len(points) + 1, dtype=np.int64)
    for q in range(len(points)):
        cands = grid["cells"].get((int(idx[q, 0]), int(idx[q, 1])), empty)
        cand_lists.append(cands)
        offsets[q + 1] = offsets[q] + len(cands)
    cand_idx = (
        np.concatenate(cand_lists) if cand_lists else np.empty(0, np.int64)
    )
    return kernels.locate_points(
        points, chart.uv, offsets, cand_idx, BARY_EPS
    )


def locate_in_chart(chart: UVChart, p):
    """Face whose UV triangle contains p (lowest index on ties), or None."""
    hit = int(locate_many(chart, np.asarray(p, dtype=np.float64)[None, :])[0])
    return hit if hit >= 0 else None


def chart_boundary(chart: UVChart):
    """UV outline of the chart as a polygon (outer ring plus holes).

    Border edges are the UV segments used by exactly one face; faces on
    either side of an interior edge gather identical coordinates, so
    exact float comparison separates border from interior.  The
    directed border edges chain into closed loops running with the
    chart on their left.
    """
    from .geom2d import Polygon2

    uv = chart.uv
    if chart.n_faces == 0:
        raise ChartError("empty chart has no boundary")
    segs = np.concatenate([uv[:, [0, 1]], uv[:, [1, 2]], uv[:, [2, 0]]])
    a, b = segs[:, 0], segs[:, 1]
    swap = (b[:, 0] < a[:, 0]) | ((b[:, 0] == a[:, 0]) & (b[:, 1] < a[:, 1]))
    lo = np.where(swap[:, None], b, a)
    hi = np.where(swap[:, None], a, b)
    key = np.concatenate([lo, hi], axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True,
                               return_counts=True)
    border = segs[counts[np.asarray(inv).reshape(-1)] == 1]
    if len(border) == 0:
        raise ChartError("chart has no border edges")

    succ: dict = {}
    for s in border:
        start = (float(s[0, 0]), float(s[0, 1]))
        if start in succ:
            raise ChartError("chart border branches; chart overlaps itself")
        succ[start] = (float(s[1, 0]), float(s[1, 1]))
    rings = []
    while succ:
        start = min(succ)
        ring = [start]
        cur = succ.pop(start)
        while cur != start:
            ring.append(cur)
            if cur not in succ:
                raise ChartError("chart border is not closed")
            cur = succ.pop(cur)
        rings.append(np.asarray(ring, dtype=np.float64))

    def ring_area(r):
        x, y = r[:, 0], r[:, 1]
        return 0.5 * float(
            np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))
        )

    outer_idx = int(np.argmax([abs(ring_area(r)) for r in rings]))
    outer = rings[outer_idx]
    holes = tuple(r for i, r in enumerate(rings) if i != outer_idx)
    return Polygon2(outer, holes)


# ------------------------------------------------------------- text format

CHART_FORMAT_VERSION = 1


def format_chart(chart: UVChart) -> str:
    """Structured-text chart document for pipeline caching."""
    lines = ["meshtex-chart %d" % CHART_FORMAT_VERSION]
    lines.append("faces %d" % chart.n_faces)
    for f in range(chart.n_faces):
        t = chart.uv[f]
        lines.append(
            "%.17g %.17g %.17g %.17g %.17g %.17g %.17g"
            % (t[0, 0], t[0, 1], t[1, 0], t[1, 1], t[2, 0], t[2, 1],
               chart.area_distortion[f])
        )
    seams = sorted(chart.seam_edges)
    lines.append("seams %d" % len(seams))
    for a, b in seams:
        lines.append("%d %d" % (a, b))
    return "\n".join(lines) + "\n"


def parse_chart(text: str) -> UVChart:
    """Chart back out of its structured-text form."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("meshtex-chart"):
        raise ChartError("not a chart document")
    try:
        version = int(lines[0].split()[1])
    except (IndexError, ValueError) as exc:
        raise ChartError("malformed chart header") from exc
    if version != CHART_FORMAT_VERSION:
        raise ChartError("unsupported chart format version %d" % version)
    if len(lines) < 2 or not lines[1].startswith("faces"):
        raise ChartError("malformed chart document")
    try:
        count = int(lines[1].split()[1])
        rows = []
        dist = []
        for ln in lines[2:2 + count]:
            vals = [float(tok) for tok in ln.split()]
            if len(vals) != 7:
                raise ChartError("malformed chart face row")
            rows.append(vals[:6])
            dist.append(vals[6])
        seam_line = lines[2 + count]
        if not seam_line.startswith("seams"):
            raise ChartError("malformed chart document")
        n_seams = int(seam_line.split()[1])
        seams = set()
        for ln in lines[3 + count:3 + count + n_seams]:
            a, b = (int(tok) for tok in ln.split())
            seams.add((min(a, b), max(a, b)))
        if len(seams) != n_seams:
            raise ChartError("seam count mismatch in chart document")
    except ChartError:
        raise
    except (IndexError, ValueError) as exc:
        raise ChartError("malformed chart document") from exc
    uv = np.array(rows, dtype=np.float64).reshape(-1, 3, 2)
    if len(uv) != count:
        raise ChartError("face count mismatch in chart document")
    return UVChart(
        uv=uv,
        seam_edges=frozenset(seams),
        area_distortion=np.array(dist, dtype=np.float64),
    )
