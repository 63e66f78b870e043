"""Raise, emboss, or cut out imprinted texture patches.

Interior patches are offset along the vertex normals of the pre-offset
surface; each boundary loop gets a wall of two triangles per edge
stitching the unmoved base ring to the offset ring, so closed inputs
stay closed.  Embossing casts rays to refuse offsets that would punch
through the opposite surface.  Cutout removes the interior faces of an
open shell instead, leaving the loops as hole boundaries.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as kernels
from .imprint import ImprintedMesh
from .mesh import (
    TAG_INTERIOR,
    TAG_WALL,
    TriMesh,
    check_watertight,
    vertex_normals,
)

MODES = ("raised", "embossed", "cutout")
CLEARANCE_SLACK = 1e-9  # relative margin on the self-intersection guard


class ExtrudeError(ValueError):
    """Invalid mode/depth, or an offset that would break the surface."""


def wall_triangulation(base_loop, offset_loop) -> np.ndarray:
    """Triangles stitching two index-corresponding boundary loops.

    ``base_loop`` and ``offset_loop`` are 1-D vertex-index arrays of
    equal length n >= 3 walking the same closed boundary.  The base
    loop must run with the patch on its left (as the loops of an
    ImprintedMesh do); the returned (2n, 3) triangles then wind
    outward, pairing each base edge against the surrounding surface
    and each offset edge against the moved patch.
    """
    base = np.asarray(base_loop, dtype=np.int64)
    off = np.asarray(offset_loop, dtype=np.int64)
    if base.ndim != 1 or len(base) < 3:
        raise ExtrudeError("wall loops must be 1-D index arrays with n >= 3")
    if base.shape != off.shape:
        raise ExtrudeError(
            "wall loops differ in length: %d vs %d" % (len(base), len(off))
        )
    n = len(base)
    faces = np.empty((2 * n, 3), dtype=np.int64)
    nxt = np.roll(base, -1)
    nxt_off = np.roll(off, -1)
    faces[0::2] = np.column_stack([base, nxt, nxt_off])
    faces[1::2] = np.column_stack([base, nxt_off, off])
    return faces


def _clearances(im: ImprintedMesh, vertices, normals) -> np.ndarray:
    """Distance from each vertex along -normal to the unmoved surface.

    Rays are cast against every non-interior face, skipping faces
    incident to the source vertex; +inf where nothing is hit.
    """
    mesh = im.mesh
    still = np.nonzero(mesh.face_tags != TAG_INTERIOR)[0]
    if len(still) == 0 or len(vertices) == 0:
        return np.full(len(vertices), np.inf)
    tris = mesh.faces[still]
    tri_pts = np.ascontiguousarray(mesh.positions[tris])
    origins = np.ascontiguousarray(mesh.positions[vertices])
    directions = np.ascontiguousarray(-normals[vertices])
    skip = (tris[None, :, :] == np.asarray(vertices)[:, None, None]).any(
        axis=2
    )
    return kernels.ray_hits(origins, directions, tri_pts, skip)


def extrude_texture(
    im: ImprintedMesh,
    mode: str,
    depth: float | None = None,
    wall_ref: float | None = None,
) -> TriMesh:
    """Turn the tagged interior patches into 3D texture.

    raised/embossed offset the patches by +/-depth along the pre-offset
    vertex normals and build walls along every boundary loop.  With
    ``wall_ref`` set (embossed only), depth is derived per placement as
    local thickness minus ``wall_ref`` — a recess leaving that much
    material.  cutout removes the interior faces of an open shell.
    """
    if mode not in MODES:
        raise ExtrudeError(
            "mode must be one of %s, got %r" % ("/".join(MODES), mode)
        )
    mesh = im.mesh
    tags = mesh.face_tags
    interior_mask = tags == TAG_INTERIOR

    if mode == "cutout":
        if check_watertight(mesh).boundary_edge_count == 0:
            raise ExtrudeError(
                "cutout would open a closed solid; extract an open shell "
                "first, then cut"
            )
        return TriMesh(
            mesh.positions, mesh.faces[~interior_mask],
            tags[~interior_mask],
        )

    if wall_ref is not None:
        if mode != "embossed":
            raise ExtrudeError("wall_ref only applies to embossed textures")
        if not wall_ref > 0:
            raise ExtrudeError("wall_ref must be positive")
    elif depth is None or not depth > 0:
        raise ExtrudeError("depth must be positive for %s textures" % mode)
    if not interior_mask.any():
        return mesh

    sign = 1.0 if mode == "raised" else -1.0
    normals = vertex_normals(mesh)
    n_place = im.n_placements

    placement_vertices = []
    loop_vertex_sets = []
    for p in range(n_place):
        pf = im.placement_faces[p]
        placement_vertices.append(np.unique(mesh.faces[pf]))
        loops = im.interior_boundary_loops[p]
        loop_vertex_sets.append(
            np.unique(np.concatenate(loops)) if loops
            else np.zeros(0, dtype=np.int64)
        )
    all_loop = np.concatenate(loop_vertex_sets) if n_place else np.zeros(0)
    if len(np.unique(all_loop)) != len(all_loop):
        raise ExtrudeError(
            "placements share boundary vertices; separate them before "
            "extruding"
        )

    depths = np.full(n_place, 0.0 if depth is None else float(depth))
    if mode == "embossed":
        for p in range(n_place):
            verts = placement_vertices[p]
            clear = _clearances(im, verts, normals)
            reach = float(clear.min()) if len(clear) else np.inf
            if wall_ref is not None:
                if not np.isfinite(reach):
                    raise ExtrudeError(
                        "placement %d: no opposite surface to probe "
                        "thickness against" % p
                    )
                depths[p] = reach - wall_ref
                if not depths[p] > 0:
                    raise ExtrudeError(
                        "placement %d: local thickness %.6g leaves no room "
                        "for a %.6g wall" % (p, reach, wall_ref)
                    )
            elif reach <= depths[p] * (1.0 + CLEARANCE_SLACK):
                raise ExtrudeError(
                    "placement %d: embossing depth %.6g reaches the "
                    "opposite surface at distance %.6g" % (p, depths[p], reach)
                )

    positions = mesh.positions.copy()
    faces = mesh.faces.copy()
    new_positions: list = []
    vmap: dict = {}
    n0 = mesh.n_vertices
    for p in range(n_place):
        inner = np.setdiff1d(
            placement_vertices[p], loop_vertex_sets[p], assume_unique=True
        )
        offset = sign * depths[p]
        positions[inner] += offset * normals[inner]
        for v in loop_vertex_sets[p]:
            v = int(v)
            vmap[v] = n0 + len(new_positions)
            new_positions.append(positions[v] + offset * normals[v])
        for fi in im.placement_faces[p]:
            faces[fi] = [vmap.get(int(v), int(v)) for v in faces[fi]]

    wall_faces: list = []
    for p in range(n_place):
        for loop in im.interior_boundary_loops[p]:
            moved = np.array([vmap[int(v)] for v in loop], dtype=np.int64)
            wall_faces.append(wall_triangulation(loop, moved))

    if new_positions:
        positions = np.concatenate([positions, np.asarray(new_positions)])
    if wall_faces:
        walls = np.concatenate(wall_faces)
        faces = np.concatenate([faces, walls])
        out_tags = np.concatenate(
            [tags, np.full(len(walls), TAG_WALL, dtype=np.uint8)]
        )
    else:
        out_tags = tags
    return TriMesh(positions, faces, out_tags)
