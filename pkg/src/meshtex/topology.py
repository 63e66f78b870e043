"""Connectivity queries shared by the field, parameterization, and
extrusion stages."""
from __future__ import annotations

import numpy as np

from .mesh import TriMesh, edge_use_table


def vertex_neighbors(mesh: TriMesh) -> list[np.ndarray]:
    """Sorted 1-ring vertex neighbours for every vertex."""
    n = len(mesh.positions)
    pairs = np.concatenate(
        [mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]], mesh.faces[:, [2, 0]]]
    )
    both = np.concatenate([pairs, pairs[:, ::-1]])
    both = np.unique(both, axis=0)
    out: list[np.ndarray] = []
    splits = np.searchsorted(both[:, 0], np.arange(n + 1))
    for i in range(n):
        out.append(both[splits[i]:splits[i + 1], 1].copy())
    return out


def vertex_faces(mesh: TriMesh) -> list[np.ndarray]:
    """Incident face indices for every vertex."""
    n = len(mesh.positions)
    f = np.repeat(np.arange(len(mesh.faces)), 3)
    v = mesh.faces.reshape(-1)
    order = np.argsort(v, kind="stable")
    v, f = v[order], f[order]
    splits = np.searchsorted(v, np.arange(n + 1))
    return [f[splits[i]:splits[i + 1]].copy() for i in range(n)]


def boundary_vertex_mask(mesh: TriMesh) -> np.ndarray:
    """True where a vertex lies on an open (single-use) edge."""
    edges, counts, _ = edge_use_table(mesh.faces)
    mask = np.zeros(len(mesh.positions), dtype=bool)
    open_edges = edges[counts == 1]
    if len(open_edges):
        mask[open_edges.reshape(-1)] = True
    return mask


def face_adjacency(mesh: TriMesh) -> np.ndarray:
    """(F, 3) neighbour face per edge (faces[i][j]->faces[i][(j+1)%3]);
    -1 where the edge is open."""
    fcount = len(mesh.faces)
    adj = np.full((fcount, 3), -1, dtype=np.int64)
    owner: dict[tuple[int, int], tuple[int, int]] = {}
    faces = mesh.faces
    for fi in range(fcount):
        for j in range(3):
            a, b = int(faces[fi, j]), int(faces[fi, (j + 1) % 3])
            key = (min(a, b), max(a, b))
            if key in owner:
                oi, oj = owner[key]
                adj[fi, j] = oi
                adj[oi, oj] = fi
            else:
                owner[key] = (fi, j)
    return adj


def connected_face_component(mesh: TriMesh, seed_face: int,
                             allowed: np.ndarray | None = None) -> np.ndarray:
    """Face indices edge-connected to ``seed_face``, optionally restricted
    to a boolean ``allowed`` mask."""
    adj = face_adjacency(mesh)
    seen = np.zeros(len(mesh.faces), dtype=bool)
    if allowed is not None and not allowed[seed_face]:
        return np.empty(0, dtype=np.int64)
    stack = [int(seed_face)]
    seen[seed_face] = True
    while stack:
        cur = stack.pop()
        for nxt in adj[cur]:
            if nxt < 0 or seen[nxt]:
                continue
            if allowed is not None and not allowed[nxt]:
                continue
            seen[nxt] = True
            stack.append(int(nxt))
    return np.flatnonzero(seen)


def vertex_components(mesh: TriMesh) -> np.ndarray:
    """Connected-component label per vertex (edge connectivity)."""
    nbrs = vertex_neighbors(mesh)
    n = len(mesh.positions)
    label = np.full(n, -1, dtype=np.int64)
    comp = 0
    for start in range(n):
        if label[start] != -1:
            continue
        stack = [start]
        label[start] = comp
        while stack:
            cur = stack.pop()
            for nxt in nbrs[cur]:
                if label[nxt] == -1:
                    label[nxt] = comp
                    stack.append(int(nxt))
        comp += 1
    return label
