import numpy as np
import pytest

from meshtex import mesh as M
from meshtex import shapes as S


def flipped_face(m, idx):
    faces = m.faces.copy()
    faces[idx] = faces[idx][::-1]
    return M.TriMesh(m.positions, faces)


def test_cube_measures():
    c = S.cube(2.0, 1)
    assert c.n_vertices == 8
    assert c.n_faces == 12
    assert M.signed_volume(c) == pytest.approx(8.0, abs=1e-12)
    assert M.surface_area(c) == pytest.approx(24.0, abs=1e-12)


def test_cube_watertight_report():
    rep = M.check_watertight(S.cube(2.0, 3))
    assert rep.is_watertight
    assert rep.boundary_edge_count == 0
    assert rep.nonmanifold_edge_count == 0
    assert rep.inconsistent_winding_count == 0
    assert rep.euler_characteristic == 2


def test_plate_open_report():
    p = S.plate(10, 10, 5, 5)
    rep = M.check_watertight(p)
    assert not rep.is_watertight
    assert rep.boundary_edge_count == 20  # 4 sides x 5 cells
    assert rep.euler_characteristic == 1  # disk


def test_flipped_face_detected():
    bad = flipped_face(S.cube(2.0, 1), 0)
    rep = M.check_watertight(bad)
    assert not rep.is_watertight
    assert rep.inconsistent_winding_count == 3  # all three edges of the flip


def test_nonmanifold_detected():
    c = S.cube(2.0, 1)
    faces = np.concatenate([c.faces, c.faces[:1]])
    rep = M.check_watertight(M.TriMesh(c.positions, faces))
    assert rep.nonmanifold_edge_count == 3


def test_degenerate_face_rejected():
    with pytest.raises(M.MeshError):
        M.TriMesh(np.zeros((3, 3)), [[0, 1, 1]])


def test_out_of_range_face_rejected():
    with pytest.raises(M.MeshError):
        M.TriMesh(np.zeros((3, 3)), [[0, 1, 3]])


def test_cube_corner_normals():
    # angle-weighted normals on a cube point along the corner diagonals
    c = S.cube(2.0, 1)
    n = M.vertex_normals(c)
    expect = c.positions / np.linalg.norm(c.positions, axis=1)[:, None]
    assert np.abs(n - expect).max() < 1e-12


def test_plate_interior_normals_up():
    p = S.plate(10, 10, 4, 4)
    n = M.vertex_normals(p)
    assert np.abs(n - [0.0, 0.0, 1.0]).max() < 1e-12


def test_icosphere_normals_radial():
    ic = S.icosphere(3.0, 3)
    n = M.vertex_normals(ic)
    radial = ic.positions / np.linalg.norm(ic.positions, axis=1)[:, None]
    cosang = np.einsum("ij,ij->i", n, radial)
    assert np.degrees(np.arccos(np.clip(cosang, -1, 1))).max() < 2.0


def test_zero_area_fan_errors():
    # a vertex whose only incident triangle is collapsed flat
    pos = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float)
    with pytest.raises(M.MeshError, match="zero-area"):
        M.vertex_normals(M.TriMesh(pos, [[0, 1, 2]]))


def test_stl_cube_is_684_bytes():
    # 80-byte header + uint32 count + 12 * 50-byte records
    data = M.export_mesh(S.cube(2.0, 1), "stl")
    assert len(data) == 684


def test_stl_roundtrip_welds():
    c = S.cube(2.0, 2)
    back = M.load_mesh(M.export_mesh(c, "stl"), "stl")
    assert back.n_vertices == c.n_vertices
    assert back.n_faces == c.n_faces
    assert M.signed_volume(back) == pytest.approx(8.0, rel=1e-6)
    assert M.check_watertight(back).is_watertight


def test_stl_roundtrip_float32_bound():
    rng = np.random.default_rng(11)
    b = S.blob(4.0, 0.2, seed=int(rng.integers(100)))
    back = M.load_mesh(M.export_mesh(b, "stl"), "stl")
    assert M.check_watertight(back).is_watertight
    # float32 quantization only
    assert abs(M.surface_area(back) - M.surface_area(b)) < 1e-3 * M.surface_area(b)


def test_stl_rejects_truncation():
    data = M.export_mesh(S.cube(2.0, 1), "stl")
    with pytest.raises(M.MeshError):
        M.load_mesh(data[:-10], "stl")


def test_stl_rejects_ascii():
    text = b"solid x\nfacet normal 0 0 1\n endfacet\nendsolid x\n" + b" " * 60
    with pytest.raises(M.MeshError):
        M.load_mesh(text, "stl")


def test_obj_roundtrip_exact_within_format():
    c = S.cylinder(2, 4, 12, 3)
    back = M.load_mesh(M.export_mesh(c, "obj"), "obj")
    assert back.n_faces == c.n_faces
    assert np.abs(back.positions - c.positions).max() < 1e-6


def test_obj_quads_fan_triangulated():
    data = b"v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"
    m = M.load_mesh(data, "obj")
    assert m.n_faces == 2
    assert M.surface_area(m) == pytest.approx(1.0)


def test_obj_ngon_rejected():
    data = b"v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv -1 1 0\nf 1 2 3 4 5\n"
    with pytest.raises(M.MeshError, match="5-gon"):
        M.load_mesh(data, "obj")


def test_obj_bad_index_rejected():
    with pytest.raises(M.MeshError):
        M.load_mesh(b"v 0 0 0\nf 1 2 3\n", "obj")
    with pytest.raises(M.MeshError):
        M.load_mesh(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n", "obj")


def test_obj_slash_forms():
    data = b"v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\nf 1/1/1 2/1/1 3//1\n"
    m = M.load_mesh(data, "obj")
    assert m.n_faces == 1


def test_empty_obj_rejected():
    with pytest.raises(M.MeshError, match="no faces"):
        M.load_mesh(b"v 0 0 0\n", "obj")


def test_unknown_format_rejected():
    with pytest.raises(M.MeshError):
        M.load_mesh(b"x", "ply")


def test_cylinder_volume_formula():
    # n-gonal prism: V = n/2 * r^2 * sin(2 pi / n) * h
    n, r, h = 24, 2.0, 5.0
    cyl = S.cylinder(r, h, n, 4)
    expect = 0.5 * n * r * r * np.sin(2 * np.pi / n) * h
    assert M.signed_volume(cyl) == pytest.approx(expect, rel=1e-12)
    assert M.check_watertight(cyl).is_watertight


def test_cone_volume_formula():
    # pyramid over the n-gon base: V = A_base * h / 3
    n, r, h = 24, 2.0, 5.0
    co = S.cone(r, h, n)
    base = 0.5 * n * r * r * np.sin(2 * np.pi / n)
    assert M.signed_volume(co) == pytest.approx(base * h / 3.0, rel=1e-12)
    assert M.check_watertight(co).is_watertight


def test_open_cylinder_boundaries():
    tube = S.cylinder(2, 4, 16, 4, capped=False)
    rep = M.check_watertight(tube)
    assert rep.boundary_edge_count == 32  # two rims of 16
    assert rep.euler_characteristic == 0  # annulus


def test_icosphere_volume_converges():
    ic = S.icosphere(3.0, 4)
    vol = M.signed_volume(ic)
    exact = 4.0 / 3.0 * np.pi * 27.0
    assert vol < exact  # inscribed
    assert vol > exact * 0.995


def test_blob_closed_and_deterministic():
    a = S.blob(4.0, 0.25, seed=7)
    b = S.blob(4.0, 0.25, seed=7)
    assert np.array_equal(a.positions, b.positions)
    assert M.check_watertight(a).is_watertight
    assert M.signed_volume(a) > 0
