"""Cursor-driven surface-region inference.

Pipeline: a per-vertex distortion field highlights crease-like vertices;
the strongest, cursor-near candidates seed a harmonic scalar field (1 on
one side of the crease, 0 on the other); the field's steepest closed
isoline becomes the region boundary and the faces on the cursor's side
form the region.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels as kernels
from .mesh import TriMesh
from .topology import (
    boundary_vertex_mask,
    connected_face_component,
    face_adjacency,
    vertex_components,
    vertex_neighbors,
)

DEFAULT_RING_RADIUS = 3
DEFAULT_CANDIDATES = 8
CANDIDATE_THRESHOLD = 0.02      # minimum distortion to seed a boundary
DISTANCE_WEIGHT_FRACTION = 0.1  # of the bounding-box diagonal
MAX_RIDGES = 8                  # distinct creases anchored per inference
CONSTRAINT_PENALTY = 1e8
ISOLINE_LEVELS = tuple(np.round(np.linspace(0.1, 0.9, 9), 10))
EXCLUSION_RINGS = 2


class SegmentationError(ValueError):
    """Raised when a field or region cannot be computed."""


@dataclass(frozen=True)
class DistortionField:
    """Per-vertex accumulated angle-deficit fraction, in [0, 1]."""

    d: np.ndarray
    ring_radius: int


@dataclass(frozen=True)
class HarmonicField:
    """Scalar field with Dirichlet values 1 on ``constrained_one`` and 0 on
    ``constrained_zero``."""

    phi: np.ndarray
    constrained_one: tuple[int, ...]
    constrained_zero: tuple[int, ...]


@dataclass(frozen=True)
class SegmentRegion:
    """An edge-connected set of faces bounded by a field isoline."""

    faces: np.ndarray
    boundary_loop: np.ndarray  # (n, 3) closed polyline, first == last
    score: float
    level: float = field(default=float("nan"))


# ------------------------------------------------------------- distortion

def angle_deficits(mesh: TriMesh) -> np.ndarray:
    """Signed angle deficit per vertex: 2pi (interior) or pi (boundary)
    minus the incident-angle sum."""
    angles = kernels.corner_angles(mesh.positions, mesh.faces)
    sums = np.zeros(len(mesh.positions))
    np.add.at(sums, mesh.faces.reshape(-1), angles.reshape(-1))
    ref = np.where(boundary_vertex_mask(mesh), np.pi, 2.0 * np.pi)
    return ref - sums


def distortion(mesh: TriMesh, ring_radius: int = DEFAULT_RING_RADIUS) -> DistortionField:
    """Max over r = 0..ring_radius of the deficit accumulated within r
    edge-rings, as a fraction of 2pi, clamped to [0, 1]."""
    if ring_radius < 0:
        raise SegmentationError("ring radius must be >= 0")
    deficits = angle_deficits(mesh)
    # Boundary turning (e.g. a flat sheet's corners) is outline shape, not
    # surface creasing: it must not seed crease candidates.
    deficits[boundary_vertex_mask(mesh)] = 0.0
    nbrs = vertex_neighbors(mesh)
    n = len(mesh.positions)
    best = np.zeros(n)
    for i in range(n):
        acc = deficits[i]
        best_i = acc
        if ring_radius > 0:
            seen = {i}
            frontier = [i]
            for _ in range(ring_radius):
                nxt = []
                for u in frontier:
                    for v in nbrs[u]:
                        v = int(v)
                        if v not in seen:
                            seen.add(v)
                            nxt.append(v)
                            acc += deficits[v]
                if not nxt:
                    break
                frontier = nxt
                best_i = max(best_i, acc)
        best[i] = best_i
    d = np.clip(best / (2.0 * np.pi), 0.0, 1.0)
    return DistortionField(d=d, ring_radius=ring_radius)


# -------------------------------------------------------------- candidates

def boundary_candidates(
    dist_field: DistortionField,
    mesh: TriMesh,
    cursor,
    k: int = DEFAULT_CANDIDATES,
) -> list[int]:
    """Up to ``k`` crease vertices scored by distortion and cursor
    proximity, kept at least ``EXCLUSION_RINGS`` edge-rings apart."""
    if k < 1:
        raise SegmentationError("candidate count must be >= 1")
    if len(mesh.positions) < k:
        raise SegmentationError(
            "mesh has %d vertices, fewer than the %d requested candidates"
            % (len(mesh.positions), k)
        )
    cursor = np.asarray(cursor, dtype=np.float64)
    lo = mesh.positions.min(axis=0)
    hi = mesh.positions.max(axis=0)
    lam = DISTANCE_WEIGHT_FRACTION * float(np.linalg.norm(hi - lo))
    lam = max(lam, 1e-12)
    dist = np.linalg.norm(mesh.positions - cursor, axis=1)
    score = dist_field.d / (1.0 + dist / lam)
    eligible = dist_field.d >= CANDIDATE_THRESHOLD
    order = sorted(np.flatnonzero(eligible), key=lambda i: (-score[i], i))
    nbrs = vertex_neighbors(mesh)
    chosen: list[int] = []
    excluded: set[int] = set()
    for i in order:
        if len(chosen) == k:
            break
        if int(i) in excluded:
            continue
        chosen.append(int(i))
        ring = {int(i)}
        frontier = [int(i)]
        for _ in range(EXCLUSION_RINGS):
            nxt = []
            for u in frontier:
                for v in nbrs[u]:
                    v = int(v)
                    if v not in ring:
                        ring.add(v)
                        nxt.append(v)
            frontier = nxt
        excluded.update(ring)
    return chosen


# ---------------------------------------------------------- harmonic field

def _cot_laplacian(mesh: TriMesh) -> sp.csr_matrix:
    """Cotangent-weight graph Laplacian with weights clamped to >= 0 so the
    discrete maximum principle holds."""
    angles = kernels.corner_angles(mesh.positions, mesh.faces)
    cot = np.cos(angles) / np.maximum(np.sin(angles), 1e-12)
    f = mesh.faces
    rows, cols, vals = [], [], []
    # angle at corner k faces the edge (k+1, k+2)
    for k in range(3):
        i = f[:, (k + 1) % 3]
        j = f[:, (k + 2) % 3]
        w = np.maximum(0.5 * cot[:, k], 0.0)
        rows.extend((i, j))
        cols.extend((j, i))
        vals.extend((-w, -w))
        rows.extend((i, j))
        cols.extend((i, j))
        vals.extend((w, w))
    n = len(mesh.positions)
    lap = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return lap.tocsr()


def harmonic_field(mesh: TriMesh, v_one, v_zero) -> HarmonicField:
    """Solve L phi = 0 with penalty-enforced Dirichlet values."""
    v_one = tuple(sorted({int(v) for v in np.atleast_1d(np.asarray(v_one, dtype=np.int64))}))
    v_zero = tuple(sorted({int(v) for v in np.atleast_1d(np.asarray(v_zero, dtype=np.int64))}))
    if not v_one or not v_zero:
        raise SegmentationError("both constraint sets must be non-empty")
    if set(v_one) & set(v_zero):
        raise SegmentationError("constraint sets overlap")
    n = len(mesh.positions)
    if max(max(v_one), max(v_zero)) >= n:
        raise SegmentationError("constraint vertex out of range")
    comp = vertex_components(mesh)
    constrained_comps = set(comp[list(v_one)]) | set(comp[list(v_zero)])
    if set(comp) - constrained_comps:
        raise SegmentationError(
            "a connected component contains no constrained vertex"
        )
    lap = _cot_laplacian(mesh).tolil()
    rhs = np.zeros(n)
    for v in v_one:
        lap[v, v] += CONSTRAINT_PENALTY
        rhs[v] = CONSTRAINT_PENALTY
    for v in v_zero:
        lap[v, v] += CONSTRAINT_PENALTY
    phi = spla.spsolve(lap.tocsc(), rhs)
    phi = np.clip(phi, 0.0, 1.0)
    phi[list(v_one)] = 1.0
    phi[list(v_zero)] = 0.0
    return HarmonicField(phi=phi, constrained_one=v_one, constrained_zero=v_zero)


# ------------------------------------------------------------ isolines

def _isoline_loops(phi: np.ndarray, mesh: TriMesh, level: float):
    """Closed loops of the phi = level set: (polyline, crossed faces)."""
    phi = phi.copy()
    phi[phi == level] += 1e-12  # avoid crossings exactly at vertices
    f = mesh.faces
    links: dict[tuple[int, int], list[tuple[int, int]]] = {}
    points: dict[tuple[int, int], np.ndarray] = {}
    seg_face: dict[frozenset, int] = {}
    for fi in range(len(f)):
        crossed = []
        for k in range(3):
            a, b = int(f[fi, k]), int(f[fi, (k + 1) % 3])
            fa, fb = phi[a], phi[b]
            if (fa - level) * (fb - level) < 0.0:
                key = (min(a, b), max(a, b))
                if key not in points:
                    t = (level - fa) / (fb - fa)
                    points[key] = mesh.positions[a] + t * (
                        mesh.positions[b] - mesh.positions[a]
                    )
                crossed.append(key)
        if len(crossed) == 2:
            links.setdefault(crossed[0], []).append(crossed[1])
            links.setdefault(crossed[1], []).append(crossed[0])
            seg_face[frozenset(crossed)] = fi
    loops = []
    visited: set[tuple[int, int]] = set()
    for start in sorted(points):
        if start in visited or len(links.get(start, ())) != 2:
            continue
        chain = [start]
        visited.add(start)
        cur = start
        prev = None
        closed = False
        while True:
            nbrs = [e for e in links.get(cur, ()) if e != prev]
            if not nbrs:
                break
            nxt = nbrs[0]
            if nxt == start:
                closed = True
                break
            if nxt in visited:
                break
            visited.add(nxt)
            chain.append(nxt)
            prev, cur = cur, nxt
        if closed and len(chain) >= 3:
            pts = np.array([points[e] for e in chain])
            faces = [
                seg_face[frozenset((chain[i], chain[(i + 1) % len(chain)]))]
                for i in range(len(chain))
                if frozenset((chain[i], chain[(i + 1) % len(chain)])) in seg_face
            ]
            loops.append((np.vstack([pts, pts[:1]]), np.array(faces)))
    return loops


def extract_isolines(
    hfield: HarmonicField, mesh: TriMesh, level: float
) -> list[np.ndarray]:
    """Closed 3D polylines where linearly interpolated phi equals level."""
    if not 0.0 < level < 1.0:
        raise SegmentationError("isoline level must lie strictly inside (0, 1)")
    return [poly for poly, _ in _isoline_loops(hfield.phi, mesh, level)]


def field_gradient(mesh: TriMesh, phi: np.ndarray) -> np.ndarray:
    """Per-face constant gradient of a vertex scalar field."""
    p0 = mesh.positions[mesh.faces[:, 0]]
    p1 = mesh.positions[mesh.faces[:, 1]]
    p2 = mesh.positions[mesh.faces[:, 2]]
    f0 = phi[mesh.faces[:, 0]][:, None]
    f1 = phi[mesh.faces[:, 1]][:, None]
    f2 = phi[mesh.faces[:, 2]][:, None]
    n = np.cross(p1 - p0, p2 - p0)
    nn = np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-300)
    nhat = n / nn
    # gradient = sum_i f_i * (nhat x opposite_edge) / (2A); 2A = |n|
    g = (
        f0 * np.cross(nhat, p2 - p1)
        + f1 * np.cross(nhat, p0 - p2)
        + f2 * np.cross(nhat, p1 - p0)
    ) / nn
    return g


# --------------------------------------------------------------- curvature

def _mean_curvature(mesh: TriMesh) -> np.ndarray:
    """Signed discrete mean-curvature estimate (positive = convex)."""
    from .mesh import vertex_normals

    lap = _cot_laplacian(mesh)
    # graph-Laplacian of positions points outward where the surface is convex
    hn = lap @ mesh.positions
    normals = vertex_normals(mesh)
    areas = np.zeros(len(mesh.positions))
    fa = 0.5 * np.linalg.norm(
        np.cross(
            mesh.positions[mesh.faces[:, 1]] - mesh.positions[mesh.faces[:, 0]],
            mesh.positions[mesh.faces[:, 2]] - mesh.positions[mesh.faces[:, 0]],
        ),
        axis=1,
    )
    np.add.at(areas, mesh.faces.reshape(-1), np.repeat(fa / 3.0, 3))
    return np.einsum("ij,ij->i", hn, normals) / np.maximum(areas, 1e-300)


# ------------------------------------------------------------ region query

def infer_region(mesh: TriMesh, cursor) -> SegmentRegion:
    """The face region the cursor most plausibly points at."""
    cursor = np.asarray(cursor, dtype=np.float64)
    lo = mesh.positions.min(axis=0)
    hi = mesh.positions.max(axis=0)
    margin = 0.5 * float(np.linalg.norm(hi - lo)) + 1e-9
    if np.any(cursor < lo - margin) or np.any(cursor > hi + margin):
        raise SegmentationError("cursor is far outside the mesh bounds")

    centroids = mesh.positions[mesh.faces].mean(axis=1)
    seed_face = int(np.argmin(np.linalg.norm(centroids - cursor, axis=1)))

    dist_field = distortion(mesh, DEFAULT_RING_RADIUS)
    # Every crease near the cursor must anchor the field: a region such as
    # a cylinder's side is bounded by two separate rims, and leaving the
    # farther one unanchored lets the flood leak straight across it.  So
    # the candidate pool is every eligible crease vertex (cursor-nearest
    # first) and the walk below dedupes whole ridges, not vertices.
    lam = max(
        DISTANCE_WEIGHT_FRACTION
        * float(np.linalg.norm(hi - lo)),
        1e-12,
    )
    cursor_dist = np.linalg.norm(mesh.positions - cursor, axis=1)
    cscore = dist_field.d / (1.0 + cursor_dist / lam)
    candidates = sorted(
        np.flatnonzero(dist_field.d >= CANDIDATE_THRESHOLD),
        key=lambda i: (-cscore[i], i),
    )
    if not candidates:
        faces = connected_face_component(mesh, seed_face)
        return SegmentRegion(
            faces=faces, boundary_loop=np.empty((0, 3)), score=0.0
        )

    curvature = _mean_curvature(mesh)
    nbrs = vertex_neighbors(mesh)
    raw = np.abs(angle_deficits(mesh))
    raw[boundary_vertex_mask(mesh)] = 0.0
    v_one: set[int] = set()
    v_zero: set[int] = set()
    walked: set[int] = set()
    ridges = 0
    for c in candidates:
        if ridges >= MAX_RIDGES:
            break
        if int(c) in walked:
            continue
        # Constraints only make sense for candidates sitting on the crease
        # itself: the accumulated distortion plateaus near a crease, so a
        # candidate that is not a local maximum of it is merely nearby and
        # has no two sides to straddle.
        if any(dist_field.d[int(v)] > dist_field.d[c] for v in nbrs[c]):
            continue
        # Isolated point constraints give a field that is steep only right
        # at the anchors, so each candidate contributes the straddle pair of
        # every vertex on its crease: vertices carrying a sizable share of
        # the candidate's own angle deficit continue the crease ridge, the
        # rest lie on one of the two surfaces beside it.  Walking the whole
        # ridge anchors the field all the way around the crease.
        thresh = 0.5 * raw[c]
        chain = {int(c)}
        frontier = [int(c)]
        while frontier:
            nxt = []
            for u in frontier:
                for v in nbrs[u]:
                    v = int(v)
                    if v not in chain and raw[v] >= thresh and raw[v] > 0.0:
                        chain.add(v)
                        nxt.append(v)
            frontier = nxt
        walked |= chain
        ridges += 1
        for u in chain:
            ring = [int(v) for v in nbrs[u]]
            if len(ring) < 2:
                continue
            flat = [v for v in ring if raw[v] < thresh]
            pool = flat if len(flat) >= 2 else ring
            hi_c = max(curvature[v] for v in pool)
            lo_c = min(curvature[v] for v in pool)
            if hi_c > lo_c:
                # Every off-crease neighbor anchors the side its curvature
                # puts it on; leaving some unpinned lets the field float at
                # exactly the gap vertices the isoline then wanders through.
                mid = 0.5 * (hi_c + lo_c)
                for v in pool:
                    (v_one if curvature[v] >= mid else v_zero).add(v)
    v_one -= v_zero
    if not v_one or not v_zero:
        faces = connected_face_component(mesh, seed_face)
        return SegmentRegion(
            faces=faces, boundary_loop=np.empty((0, 3)), score=0.0
        )

    try:
        hfield = harmonic_field(mesh, sorted(v_one), sorted(v_zero))
    except SegmentationError:
        faces = connected_face_component(mesh, seed_face)
        return SegmentRegion(
            faces=faces, boundary_loop=np.empty((0, 3)), score=0.0
        )

    # A loop is ranked by the total gradient it collects across the faces
    # it crosses (its length-weighted field jump): a short loop hugging one
    # point constraint has a steep but tiny footprint and must lose to the
    # long cut that actually runs along the crease.
    grad = np.linalg.norm(field_gradient(mesh, hfield.phi), axis=1)
    best = None
    for level in ISOLINE_LEVELS:
        loops = _isoline_loops(hfield.phi, mesh, float(level))
        for loop, crossed in loops:
            strength = float(np.sum(grad[crossed])) if len(crossed) else 0.0
            if best is None or strength > best[0] + 1e-15:
                best = (strength, float(level), loop, crossed, loops)
    if best is None:
        faces = connected_face_component(mesh, seed_face)
        return SegmentRegion(
            faces=faces, boundary_loop=np.empty((0, 3)), score=0.0
        )

    _, level, loop, crossed, loops = best
    faces = _cut_region(mesh, hfield.phi, raw, level, loops, seed_face)
    score = float(np.mean(grad[crossed])) if len(crossed) else 0.0
    return SegmentRegion(
        faces=faces, boundary_loop=loop, score=score, level=level
    )


def _cut_region(mesh, phi, raw, level, loops, seed_face):
    """Faces on the seed's side after cutting along every loop of a level.

    The isoline's crossed faces act as flood-fill barriers.  A crossed face
    straddles the cut, so whether it belongs to the seed's side is decided
    by its off-crease corners (the isoline runs through the transition band
    around the crease, and the crease polyline itself is the semantic
    boundary); faces without a crease corner vote with their centroid.
    """
    barrier = np.zeros(len(mesh.faces), dtype=bool)
    for _, crossed in loops:
        barrier[crossed] = True

    face_phi = phi[mesh.faces].mean(axis=1)
    if barrier[seed_face]:
        # The cursor face straddles the isoline: restart from the adjacent
        # uncut face on the same side, if any.
        adj = face_adjacency(mesh)
        side = face_phi[seed_face] > level
        for nb in adj[seed_face]:
            if nb >= 0 and not barrier[nb] and (face_phi[nb] > level) == side:
                seed_face = int(nb)
                break
        else:
            return np.array([seed_face], dtype=np.int64)

    component = connected_face_component(mesh, seed_face, ~barrier)
    in_component = np.zeros(len(mesh.faces), dtype=bool)
    in_component[component] = True

    seed_side = face_phi[seed_face] > level
    corner_raw = raw[mesh.faces]
    corner_phi = phi[mesh.faces]
    off_crease = corner_raw < 0.5 * corner_raw.max(axis=1, keepdims=True)
    corner_on_seed = (corner_phi > level) == seed_side
    votes_for = (off_crease & corner_on_seed).sum(axis=1)
    votes_against = (off_crease & ~corner_on_seed).sum(axis=1)
    centroid_on_seed = (face_phi > level) == seed_side
    on_seed = np.where(
        votes_for == votes_against, centroid_on_seed, votes_for > votes_against
    )

    adj = face_adjacency(mesh)
    attachable = barrier & on_seed
    while True:
        touches = in_component[adj].any(axis=1)
        grow = attachable & touches & ~in_component
        if not grow.any():
            break
        in_component |= grow
    return np.flatnonzero(in_component).astype(np.int64)


# ------------------------------------------------------------- text format

REGION_FORMAT_VERSION = 1


def format_region(region: SegmentRegion) -> str:
    """Structured-text face list for CLI piping."""
    lines = ["meshtex-region %d" % REGION_FORMAT_VERSION]
    lines.append("faces %d" % len(region.faces))
    lines.append(" ".join(str(int(i)) for i in region.faces))
    lines.append("score %.17g" % region.score)
    return "\n".join(lines) + "\n"


def parse_region_faces(text: str) -> np.ndarray:
    """Face indices back out of the structured-text form."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("meshtex-region"):
        raise SegmentationError("not a region document")
    version = int(lines[0].split()[1])
    if version != REGION_FORMAT_VERSION:
        raise SegmentationError("unsupported region format version %d" % version)
    if len(lines) < 3 or not lines[1].startswith("faces"):
        raise SegmentationError("malformed region document")
    count = int(lines[1].split()[1])
    idx = np.array([int(v) for v in lines[2].split()], dtype=np.int64)
    if len(idx) != count:
        raise SegmentationError("face count mismatch in region document")
    return idx
