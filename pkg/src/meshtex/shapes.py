"""Procedural test meshes: plate, cube, cylinder, cone, sphere, blob.

All closed shapes are wound outward (positive signed volume).  Units
are millimeters, matching the rest of the package.
"""

from __future__ import annotations

import numpy as np

from .mesh import TriMesh


def _weld(positions: np.ndarray, faces: np.ndarray, tol: float = 1e-9) -> TriMesh:
    keys = np.round(positions / tol).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    return TriMesh(positions[first], inverse[faces])


def plate(width: float = 10.0, height: float = 10.0, nx: int = 10, ny: int = 10) -> TriMesh:
    """Flat rectangular grid in the z=0 plane, centered, normals +z."""
    xs = np.linspace(-width / 2.0, width / 2.0, nx + 1)
    ys = np.linspace(-height / 2.0, height / 2.0, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pos = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])
    faces = []
    stride = ny + 1
    for i in range(nx):
        for j in range(ny):
            a = i * stride + j
            b = (i + 1) * stride + j
            c = (i + 1) * stride + j + 1
            d = i * stride + j + 1
            faces.append((a, b, c))
            faces.append((a, c, d))
    return TriMesh(pos, np.array(faces, dtype=np.int64))


def cube(size: float = 10.0, subdiv: int = 1) -> TriMesh:
    """Axis-aligned cube centered at the origin, subdiv cells per edge."""
    h = size / 2.0
    xs = np.linspace(-h, h, subdiv + 1)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    grid = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, h)])
    fcs = []
    stride = subdiv + 1
    for i in range(subdiv):
        for j in range(subdiv):
            a = i * stride + j
            b = (i + 1) * stride + j
            c = (i + 1) * stride + j + 1
            d = i * stride + j + 1
            fcs.append((a, b, c))
            fcs.append((a, c, d))
    fgrid = np.array(fcs, dtype=np.int64)
    c, s = 0.0, 1.0
    rots = [
        np.eye(3),                                    # +z
        np.array([[1, 0, 0], [0, -1, 0], [0, 0, -1]], float),  # -z (pi about x)
        np.array([[0, 0, 1], [0, 1, 0], [-1, 0, 0]], float),   # +x (pi/2 about y)
        np.array([[0, 0, -1], [0, 1, 0], [1, 0, 0]], float),   # -x
        np.array([[1, 0, 0], [0, 0, 1], [0, -1, 0]], float),   # +y (-pi/2 about x)
        np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0]], float),   # -y
    ]
    all_pos = []
    all_faces = []
    off = 0
    for rot in rots:
        all_pos.append(grid @ rot.T)
        all_faces.append(fgrid + off)
        off += len(grid)
    return _weld(np.concatenate(all_pos), np.concatenate(all_faces))


def _cap_disc(pos, faces, rim_indices, radius, z, cap_rings, flip):
    """Concentric-ring disc closing a circular rim.

    Appends vertices/faces in place; ``flip`` reverses winding for a
    downward-facing cap.
    """
    segments = len(rim_indices)
    theta = 2.0 * np.pi * np.arange(segments) / segments
    outer = list(rim_indices)
    for m in range(cap_rings - 1, 0, -1):
        r = radius * m / cap_rings
        start = len(pos)
        pos.extend(
            np.column_stack(
                [r * np.cos(theta), r * np.sin(theta), np.full(segments, z)]
            )
        )
        inner = list(range(start, start + segments))
        for j in range(segments):
            jn = (j + 1) % segments
            quad = [
                (outer[j], outer[jn], inner[j]),
                (outer[jn], inner[jn], inner[j]),
            ]
            for tri in quad:
                faces.append(tri[::-1] if flip else tri)
        outer = inner
    center = len(pos)
    pos.append([0.0, 0.0, z])
    for j in range(segments):
        jn = (j + 1) % segments
        tri = (outer[j], outer[jn], center)
        faces.append(tri[::-1] if flip else tri)


def cylinder(
    radius: float = 5.0,
    height: float = 10.0,
    segments: int = 32,
    rings: int = 8,
    capped: bool = True,
    cap_rings: int | None = None,
) -> TriMesh:
    """Cylinder along z, centered at the origin.

    Caps are concentric-ring discs (radial spacing roughly matching the
    rim chord length) so triangle quality and edge-ring distances stay
    uniform.  With capped=False the result is an open tube with two
    boundary loops.
    """
    if segments < 3:
        raise ValueError("cylinder needs at least 3 segments")
    if cap_rings is None:
        cap_rings = max(1, round(segments / (2.0 * np.pi)))
    theta = 2.0 * np.pi * np.arange(segments) / segments
    zs = np.linspace(-height / 2.0, height / 2.0, rings + 1)
    ring = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    pos = []
    for z in zs:
        pos.extend(np.column_stack([ring, np.full(segments, z)]))
    faces = []
    for i in range(rings):
        for j in range(segments):
            a = i * segments + j
            b = i * segments + (j + 1) % segments
            c = (i + 1) * segments + (j + 1) % segments
            d = (i + 1) * segments + j
            faces.append((a, b, c))
            faces.append((a, c, d))
    if capped:
        bottom_rim = list(range(segments))
        top_rim = list(range(rings * segments, rings * segments + segments))
        _cap_disc(pos, faces, bottom_rim, radius, -height / 2.0, cap_rings, flip=True)
        _cap_disc(pos, faces, top_rim, radius, height / 2.0, cap_rings, flip=False)
    return TriMesh(np.asarray(pos, dtype=np.float64), np.array(faces, dtype=np.int64))


def cone(
    radius: float = 5.0,
    height: float = 10.0,
    segments: int = 32,
    rings: int = 8,
    capped: bool = True,
    cap_rings: int | None = None,
) -> TriMesh:
    """Cone with base ring at z=0 and apex at z=height.

    The lateral surface is split into rings so the apex fan stays small;
    the base cap is a concentric-ring disc.
    """
    if segments < 3:
        raise ValueError("cone needs at least 3 segments")
    if cap_rings is None:
        cap_rings = max(1, round(segments / (2.0 * np.pi)))
    theta = 2.0 * np.pi * np.arange(segments) / segments
    pos = []
    faces = []
    for i in range(rings):
        t = i / rings
        r = radius * (1.0 - t)
        z = height * t
        pos.extend(
            np.column_stack(
                [r * np.cos(theta), r * np.sin(theta), np.full(segments, z)]
            )
        )
    apex = len(pos)
    pos.append([0.0, 0.0, height])
    for i in range(rings - 1):
        for j in range(segments):
            a = i * segments + j
            b = i * segments + (j + 1) % segments
            c = (i + 1) * segments + (j + 1) % segments
            d = (i + 1) * segments + j
            faces.append((a, b, c))
            faces.append((a, c, d))
    last = (rings - 1) * segments
    for j in range(segments):
        faces.append((last + j, last + (j + 1) % segments, apex))
    if capped:
        base_rim = list(range(segments))
        _cap_disc(pos, faces, base_rim, radius, 0.0, cap_rings, flip=True)
    return TriMesh(np.asarray(pos, dtype=np.float64), np.array(faces, dtype=np.int64))


def icosphere(radius: float = 5.0, subdivisions: int = 3) -> TriMesh:
    """Geodesic sphere from an icosahedron, 4-way subdivision per level."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts[0])
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = list(verts)
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            got = cache.get(key)
            if got is not None:
                return got
            p = verts[a] + verts[b]
            p = p / np.linalg.norm(p)
            verts.append(p)
            cache[key] = len(verts) - 1
            return cache[key]

        nxt = []
        for a, b, c in faces:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            nxt += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = nxt
    pos = np.array(verts) * radius
    return TriMesh(pos, np.array(faces, dtype=np.int64))


def blob(
    radius: float = 5.0,
    amplitude: float = 0.25,
    seed: int = 7,
    subdivisions: int = 4,
    lobes: int = 6,
) -> TriMesh:
    """Smooth organic closed shape: icosphere with lobed radial displacement.

    Deterministic for a given seed.  Used as the freeform stand-in model
    in the acceptance corpus.
    """
    base = icosphere(1.0, subdivisions)
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(lobes, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    freqs = rng.uniform(1.0, 3.0, size=lobes)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=lobes)
    d = base.positions
    bump = np.zeros(len(d))
    for k in range(lobes):
        bump += np.sin(freqs[k] * (d @ dirs[k]) * np.pi + phases[k])
    bump /= lobes
    r = radius * (1.0 + amplitude * bump)
    return TriMesh(d * r[:, None], base.faces)
