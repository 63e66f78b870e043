"""Indexed triangle mesh: I/O, normals, measures, watertightness checks.

Coordinates are millimeters throughout.  Faces are stored as an (m, 3)
int array of vertex indices with counter-clockwise winding seen from
outside.  Face tags track provenance through the texturing pipeline:
0 = untouched input face, 1 = retriangulated interior, 2 = wall/side.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

TAG_UNTOUCHED = 0
TAG_INTERIOR = 1
TAG_WALL = 2

WELD_TOLERANCE = 1e-6  # mm, STL import vertex merge grid


class MeshError(ValueError):
    """Malformed mesh data or unsupported mesh content."""


@dataclass(frozen=True)
class TriMesh:
    positions: np.ndarray
    faces: np.ndarray
    face_tags: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        pos = np.ascontiguousarray(np.asarray(self.positions, dtype=np.float64))
        fcs = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise MeshError("positions must be (n, 3)")
        if fcs.size == 0:
            fcs = fcs.reshape(0, 3)
        if fcs.ndim != 2 or fcs.shape[1] != 3:
            raise MeshError("faces must be (m, 3)")
        if fcs.size and (fcs.min() < 0 or fcs.max() >= len(pos)):
            raise MeshError("face index out of range")
        if fcs.size:
            same = (
                (fcs[:, 0] == fcs[:, 1])
                | (fcs[:, 1] == fcs[:, 2])
                | (fcs[:, 2] == fcs[:, 0])
            )
            if same.any():
                raise MeshError(
                    "degenerate face (repeated vertex index) at face %d"
                    % int(np.nonzero(same)[0][0])
                )
        if not np.isfinite(pos).all():
            raise MeshError("non-finite vertex coordinate")
        tags = self.face_tags
        if tags is None:
            tags = np.zeros(len(fcs), dtype=np.uint8)
        else:
            tags = np.ascontiguousarray(np.asarray(tags, dtype=np.uint8))
            if tags.shape != (len(fcs),):
                raise MeshError("face_tags must be (m,)")
        for arr in (pos, fcs, tags):
            arr.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "faces", fcs)
        object.__setattr__(self, "face_tags", tags)

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_faces(self) -> int:
        return len(self.faces)


@dataclass(frozen=True)
class WatertightReport:
    is_watertight: bool
    boundary_edge_count: int
    nonmanifold_edge_count: int
    inconsistent_winding_count: int
    euler_characteristic: int


def _sorted_edges(faces: np.ndarray) -> np.ndarray:
    """All 3m directed edges as sorted (min, max) pairs, shape (3m, 2)."""
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    return np.sort(e, axis=1)


def edge_use_table(faces: np.ndarray):
    """Unique undirected edges plus per-edge use counts and directions.

    Returns (edges (e,2), counts (e,), fwd_counts (e,)) where fwd counts
    how many uses traverse the edge from low index to high index.
    """
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    forward = e[:, 0] < e[:, 1]
    es = np.sort(e, axis=1)
    edges, inv, counts = np.unique(es, axis=0, return_inverse=True, return_counts=True)
    inv = np.asarray(inv).reshape(-1)
    fwd = np.zeros(len(edges), dtype=np.int64)
    np.add.at(fwd, inv, forward.astype(np.int64))
    return edges, counts, fwd


def check_watertight(mesh: TriMesh) -> WatertightReport:
    """Classify every undirected edge by use count and winding agreement.

    A watertight mesh has every edge used exactly twice, in opposite
    directions.  Edges used once are boundary; edges used three or more
    times are non-manifold; edges used twice in the same direction are
    inconsistently wound.
    """
    if mesh.n_faces == 0:
        return WatertightReport(False, 0, 0, 0, mesh.n_vertices)
    edges, counts, fwd = edge_use_table(mesh.faces)
    boundary = int((counts == 1).sum())
    nonmanifold = int((counts > 2).sum())
    pair = counts == 2
    bad_winding = int((pair & ((fwd == 0) | (fwd == 2))).sum())
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[mesh.faces.ravel()] = True
    euler = int(used.sum()) - len(edges) + mesh.n_faces
    ok = boundary == 0 and nonmanifold == 0 and bad_winding == 0
    return WatertightReport(ok, boundary, nonmanifold, bad_winding, euler)


def face_normals(mesh: TriMesh, *, normalize: bool = True) -> np.ndarray:
    p = mesh.positions
    f = mesh.faces
    n = np.cross(p[f[:, 1]] - p[f[:, 0]], p[f[:, 2]] - p[f[:, 0]])
    if normalize:
        ln = np.linalg.norm(n, axis=1)
        n = n / np.maximum(ln, 1e-300)[:, None]
    return n


def face_areas(mesh: TriMesh) -> np.ndarray:
    n = face_normals(mesh, normalize=False)
    return 0.5 * np.linalg.norm(n, axis=1)


def surface_area(mesh: TriMesh) -> float:
    return float(face_areas(mesh).sum())


def signed_volume(mesh: TriMesh) -> float:
    """Signed enclosed volume via the divergence theorem (mm^3).

    Positive for consistently outward-wound closed surfaces.
    """
    p = mesh.positions
    f = mesh.faces
    v0, v1, v2 = p[f[:, 0]], p[f[:, 1]], p[f[:, 2]]
    return float(np.einsum("ij,ij->i", v0, np.cross(v1, v2)).sum() / 6.0)


def submesh(mesh: TriMesh, faces) -> TriMesh:
    """Face-subset mesh with vertices renumbered (order preserved)."""
    idx = np.unique(np.asarray(faces, dtype=np.int64).reshape(-1))
    if len(idx) == 0:
        raise MeshError("submesh needs at least one face")
    if idx[0] < 0 or idx[-1] >= mesh.n_faces:
        raise MeshError("submesh face index out of range")
    vids = np.unique(mesh.faces[idx])
    remap = np.full(mesh.n_vertices, -1, dtype=np.int64)
    remap[vids] = np.arange(len(vids))
    return TriMesh(
        np.ascontiguousarray(mesh.positions[vids]),
        remap[mesh.faces[idx]],
        mesh.face_tags[idx],
    )


def vertex_normals(mesh: TriMesh) -> np.ndarray:
    """Angle-weighted vertex normals, unit length.

    Zero-area faces contribute nothing; a vertex whose incident fan sums
    to (near) zero is an error so downstream offsets never silently use
    a garbage direction.
    """
    p = mesh.positions
    f = mesh.faces
    fn = face_normals(mesh, normalize=False)
    ln = np.linalg.norm(fn, axis=1)
    nonzero = ln > 1e-300
    unit = np.zeros_like(fn)
    unit[nonzero] = fn[nonzero] / ln[nonzero, None]
    ang = _kernels.corner_angles(p, f)
    ang = ang * nonzero[:, None]
    acc = np.zeros((mesh.n_vertices, 3))
    for k in range(3):
        np.add.at(acc, f[:, k], ang[:, k, None] * unit)
    norms = np.linalg.norm(acc, axis=1)
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[f.ravel()] = True
    bad = used & (norms < 1e-12)
    if bad.any():
        raise MeshError(
            "vertex %d has a zero-area incident fan, normal undefined"
            % int(np.nonzero(bad)[0][0])
        )
    out = np.zeros((mesh.n_vertices, 3))
    out[used] = acc[used] / norms[used, None]
    return out


# ---------------------------------------------------------------------------
# I/O


def load_mesh(data: bytes, fmt: str) -> TriMesh:
    fmt = fmt.lower().lstrip(".")
    if fmt == "obj":
        return _load_obj(data)
    if fmt == "stl":
        return _load_stl(data)
    raise MeshError("unsupported mesh format %r" % fmt)


def export_mesh(mesh: TriMesh, fmt: str) -> bytes:
    fmt = fmt.lower().lstrip(".")
    if fmt == "obj":
        return _export_obj(mesh)
    if fmt == "stl":
        return _export_stl(mesh)
    raise MeshError("unsupported mesh format %r" % fmt)


def _load_obj(data: bytes) -> TriMesh:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MeshError("OBJ data is not valid UTF-8") from exc
    positions = []
    faces = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise MeshError("OBJ line %d: vertex needs 3 coordinates" % lineno)
            try:
                positions.append(tuple(float(x) for x in parts[1:4]))
            except ValueError as exc:
                raise MeshError("OBJ line %d: bad vertex coordinate" % lineno) from exc
        elif tag == "f":
            idx = []
            for tok in parts[1:]:
                head = tok.split("/")[0]
                try:
                    i = int(head)
                except ValueError as exc:
                    raise MeshError("OBJ line %d: bad face index %r" % (lineno, tok)) from exc
                if i <= 0:
                    raise MeshError(
                        "OBJ line %d: only positive 1-based indices supported" % lineno
                    )
                idx.append(i - 1)
            if len(idx) == 3:
                faces.append(tuple(idx))
            elif len(idx) == 4:
                # fan triangulation preserving winding
                faces.append((idx[0], idx[1], idx[2]))
                faces.append((idx[0], idx[2], idx[3]))
            else:
                raise MeshError(
                    "OBJ line %d: %d-gon faces not supported (max 4)" % (lineno, len(idx))
                )
        # vn/vt/o/g/s/usemtl/mtllib are ignored
    if not faces:
        raise MeshError("OBJ contains no faces")
    n = len(positions)
    for tri in faces:
        for i in tri:
            if i >= n:
                raise MeshError("OBJ face references vertex %d of %d" % (i + 1, n))
    return TriMesh(np.array(positions, dtype=np.float64), np.array(faces, dtype=np.int64))


def _export_obj(mesh: TriMesh) -> bytes:
    out = []
    for x, y, z in mesh.positions:
        out.append("v %.9f %.9f %.9f" % (x, y, z))
    for a, b, c in mesh.faces:
        out.append("f %d %d %d" % (a + 1, b + 1, c + 1))
    return ("\n".join(out) + "\n").encode("utf-8")


def _load_stl(data: bytes) -> TriMesh:
    if len(data) < 84:
        raise MeshError("binary STL shorter than its 84-byte preamble")
    if data[:5] == b"solid" and b"facet" in data[:512]:
        # ASCII STL masquerading; we only accept binary
        raise MeshError("ASCII STL not supported, export as binary STL")
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) != expected:
        raise MeshError(
            "binary STL length %d does not match %d triangles (want %d)"
            % (len(data), count, expected)
        )
    if count == 0:
        raise MeshError("STL contains no triangles")
    raw = np.frombuffer(data, dtype=np.uint8, offset=84)
    rec = raw.reshape(count, 50)
    tri = (
        rec[:, 12:48]
        .copy()
        .view("<f4")
        .reshape(count, 3, 3)
        .astype(np.float64)
    )
    pts = tri.reshape(-1, 3)
    # weld: quantize to the tolerance grid, unique rows, keep first occurrence
    keys = np.round(pts / WELD_TOLERANCE).astype(np.int64)
    _, first, inverse = np.unique(
        keys, axis=0, return_index=True, return_inverse=True
    )
    positions = pts[first]
    faces = np.asarray(inverse).reshape(count, 3)
    good = (
        (faces[:, 0] != faces[:, 1])
        & (faces[:, 1] != faces[:, 2])
        & (faces[:, 2] != faces[:, 0])
    )
    faces = faces[good]
    if len(faces) == 0:
        raise MeshError("STL collapsed to no valid triangles after welding")
    used = np.zeros(len(positions), dtype=bool)
    used[faces.ravel()] = True
    remap = np.cumsum(used) - 1
    return TriMesh(positions[used], remap[faces])


def _export_stl(mesh: TriMesh) -> bytes:
    header = b"meshtex binary STL".ljust(80, b" ")
    count = mesh.n_faces
    n = face_normals(mesh).astype(np.float32)
    p = mesh.positions
    f = mesh.faces
    rec = np.zeros(count, dtype=np.dtype([
        ("normal", "<f4", 3),
        ("v0", "<f4", 3),
        ("v1", "<f4", 3),
        ("v2", "<f4", 3),
        ("attr", "<u2"),
    ]))
    rec["normal"] = n
    rec["v0"] = p[f[:, 0]].astype(np.float32)
    rec["v1"] = p[f[:, 1]].astype(np.float32)
    rec["v2"] = p[f[:, 2]].astype(np.float32)
    return header + struct.pack("<I", count) + rec.tobytes()


def transformed(mesh: TriMesh, *, scale: float = 1.0, translate=(0.0, 0.0, 0.0)) -> TriMesh:
    pos = mesh.positions * scale + np.asarray(translate, dtype=np.float64)
    return TriMesh(pos, mesh.faces, mesh.face_tags)
