"""Hot numeric kernels: numba-jitted fast path with a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``MESHTEX_NUMBA`` is not set to ``0``/``false``/``no``.  Both
implementations are kept in sync and cross-checked in tests; the
benchmark in ``benchmarks/bench_kernels.py`` compares them.
"""

from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("MESHTEX_NUMBA", "1").strip().lower()
_WANT_NUMBA = _flag not in ("0", "false", "no", "off")

if _WANT_NUMBA:
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USING_NUMBA = False
else:
    USING_NUMBA = False


# ---------------------------------------------------------------------------
# corner angles

def _corner_angles_np(positions, faces):
    p0 = positions[faces[:, 0]]
    p1 = positions[faces[:, 1]]
    p2 = positions[faces[:, 2]]
    out = np.empty((len(faces), 3), dtype=np.float64)
    for k, (a, b, c) in enumerate(((p0, p1, p2), (p1, p2, p0), (p2, p0, p1))):
        u = b - a
        v = c - a
        nu = np.linalg.norm(u, axis=1)
        nv = np.linalg.norm(v, axis=1)
        denom = np.maximum(nu * nv, 1e-300)
        cosang = np.clip(np.einsum("ij,ij->i", u, v) / denom, -1.0, 1.0)
        out[:, k] = np.arccos(cosang)
    return out


def _corner_angles_nb(positions, faces):
    m = faces.shape[0]
    out = np.empty((m, 3), dtype=np.float64)
    for i in range(m):
        for k in range(3):
            a = faces[i, k]
            b = faces[i, (k + 1) % 3]
            c = faces[i, (k + 2) % 3]
            ux = positions[b, 0] - positions[a, 0]
            uy = positions[b, 1] - positions[a, 1]
            uz = positions[b, 2] - positions[a, 2]
            vx = positions[c, 0] - positions[a, 0]
            vy = positions[c, 1] - positions[a, 1]
            vz = positions[c, 2] - positions[a, 2]
            nu = np.sqrt(ux * ux + uy * uy + uz * uz)
            nv = np.sqrt(vx * vx + vy * vy + vz * vz)
            denom = nu * nv
            if denom < 1e-300:
                denom = 1e-300
            cosang = (ux * vx + uy * vy + uz * vz) / denom
            if cosang > 1.0:
                cosang = 1.0
            elif cosang < -1.0:
                cosang = -1.0
            out[i, k] = np.arccos(cosang)
    return out


# ---------------------------------------------------------------------------
# ARAP local phase: per-face best-fit rotation + deformation energy
#
# eloc holds each face's two reference edge vectors in its local isometric
# frame, cot the cotangent weight per corner.  The covariance per face is
#   C = sum_k cot_k * (uv-edge_k) (local-edge_k)^T
# and the best rotation is the signed 2x2 polar factor of C.

def _arap_local_np(uv, faces, eloc, cot):
    m = faces.shape[0]
    e_uv = np.empty((m, 3, 2))
    for k in range(3):
        e_uv[:, k, :] = uv[faces[:, (k + 1) % 3]] - uv[faces[:, k]]
    # C = sum_k w_k * outer(e_uv_k, eloc_k)
    cov = np.einsum("fk,fki,fkj->fij", cot, e_uv, eloc)
    a = cov[:, 0, 0]
    b = cov[:, 0, 1]
    c = cov[:, 1, 0]
    d = cov[:, 1, 1]
    # closed-form signed polar decomposition of a 2x2 matrix
    p = a + d
    q = b - c
    h = np.sqrt(p * p + q * q)
    small = h < 1e-300
    cosr = np.where(small, 1.0, p / np.where(small, 1.0, h))
    sinr = np.where(small, 0.0, q / np.where(small, 1.0, h))
    rot = np.empty((m, 2, 2))
    rot[:, 0, 0] = cosr
    rot[:, 0, 1] = sinr
    rot[:, 1, 0] = -sinr
    rot[:, 1, 1] = cosr
    # energy = sum w_k ||e_uv_k - R eloc_k||^2
    re = np.einsum("fij,fkj->fki", rot, eloc)
    diff = e_uv - re
    energy = float(np.einsum("fk,fki->", cot, diff * diff))
    return rot, energy


def _arap_local_nb(uv, faces, eloc, cot):
    m = faces.shape[0]
    rot = np.empty((m, 2, 2))
    energy = 0.0
    for i in range(m):
        ca = 0.0
        cb = 0.0
        cc = 0.0
        cd = 0.0
        for k in range(3):
            va = faces[i, k]
            vb = faces[i, (k + 1) % 3]
            ex = uv[vb, 0] - uv[va, 0]
            ey = uv[vb, 1] - uv[va, 1]
            w = cot[i, k]
            ca += w * ex * eloc[i, k, 0]
            cb += w * ex * eloc[i, k, 1]
            cc += w * ey * eloc[i, k, 0]
            cd += w * ey * eloc[i, k, 1]
        p = ca + cd
        q = cb - cc
        h = np.sqrt(p * p + q * q)
        if h < 1e-300:
            cosr = 1.0
            sinr = 0.0
        else:
            cosr = p / h
            sinr = q / h
        rot[i, 0, 0] = cosr
        rot[i, 0, 1] = sinr
        rot[i, 1, 0] = -sinr
        rot[i, 1, 1] = cosr
        for k in range(3):
            va = faces[i, k]
            vb = faces[i, (k + 1) % 3]
            ex = uv[vb, 0] - uv[va, 0]
            ey = uv[vb, 1] - uv[va, 1]
            rx = cosr * eloc[i, k, 0] + sinr * eloc[i, k, 1]
            ry = -sinr * eloc[i, k, 0] + cosr * eloc[i, k, 1]
            dx = ex - rx
            dy = ey - ry
            energy += cot[i, k] * (dx * dx + dy * dy)
    return rot, energy


# ---------------------------------------------------------------------------
# ARAP global phase right-hand side
#
# For the edge (k -> k+1) of each face, with rotated reference edge
# r = R_f eloc_k and weight w, the solve  L u = rhs  receives
# rhs[k] -= w*r and rhs[k+1] += w*r.

def _arap_rhs_np(rot, faces, eloc, cot, nv):
    re = np.einsum("fij,fkj->fki", rot, eloc)
    w = cot[:, :, None]
    rhs = np.zeros((nv, 2))
    for k in range(3):
        np.add.at(rhs, faces[:, (k + 1) % 3], w[:, k] * re[:, k])
        np.subtract.at(rhs, faces[:, k], w[:, k] * re[:, k])
    return rhs


def _arap_rhs_nb(rot, faces, eloc, cot, nv):
    rhs = np.zeros((nv, 2))
    m = faces.shape[0]
    for i in range(m):
        for k in range(3):
            va = faces[i, k]
            vb = faces[i, (k + 1) % 3]
            rx = rot[i, 0, 0] * eloc[i, k, 0] + rot[i, 0, 1] * eloc[i, k, 1]
            ry = rot[i, 1, 0] * eloc[i, k, 0] + rot[i, 1, 1] * eloc[i, k, 1]
            w = cot[i, k]
            rhs[vb, 0] += w * rx
            rhs[vb, 1] += w * ry
            rhs[va, 0] -= w * rx
            rhs[va, 1] -= w * ry
    return rhs


# ---------------------------------------------------------------------------
# batch point-in-triangle location over grid candidate lists
#
# For each query point, candidate faces are cand_idx[cand_off[q]:cand_off[q+1]]
# and the lowest-index face containing the point (barycentric coordinates
# within [-eps, 1+eps]) wins.  Returns -1 where no face contains the point.

def _locate_points_np(points, tri_uv, cand_off, cand_idx, eps):
    nq = len(points)
    out = np.full(nq, -1, dtype=np.int64)
    for q in range(nq):
        cands = cand_idx[cand_off[q]:cand_off[q + 1]]
        if len(cands) == 0:
            continue
        cands = np.sort(cands)
        px, py = points[q]
        best = -1
        for f in cands:
            ax, ay = tri_uv[f, 0]
            bx, by = tri_uv[f, 1]
            cx, cy = tri_uv[f, 2]
            den = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay)
            if den == 0.0:
                continue
            l1 = ((px - ax) * (cy - ay) - (cx - ax) * (py - ay)) / den
            l2 = ((bx - ax) * (py - ay) - (px - ax) * (by - ay)) / den
            l0 = 1.0 - l1 - l2
            if l0 >= -eps and l1 >= -eps and l2 >= -eps:
                best = f
                break
        out[q] = best
    return out


def _locate_points_nb(points, tri_uv, cand_off, cand_idx, eps):
    nq = points.shape[0]
    out = np.full(nq, -1, dtype=np.int64)
    for q in range(nq):
        lo = cand_off[q]
        hi = cand_off[q + 1]
        if hi <= lo:
            continue
        cands = np.sort(cand_idx[lo:hi])
        px = points[q, 0]
        py = points[q, 1]
        best = -1
        for ci in range(cands.shape[0]):
            f = cands[ci]
            ax = tri_uv[f, 0, 0]
            ay = tri_uv[f, 0, 1]
            bx = tri_uv[f, 1, 0]
            by = tri_uv[f, 1, 1]
            cx = tri_uv[f, 2, 0]
            cy = tri_uv[f, 2, 1]
            den = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay)
            if den == 0.0:
                continue
            l1 = ((px - ax) * (cy - ay) - (cx - ax) * (py - ay)) / den
            l2 = ((bx - ax) * (py - ay) - (px - ax) * (by - ay)) / den
            l0 = 1.0 - l1 - l2
            if l0 >= -eps and l1 >= -eps and l2 >= -eps:
                best = f
                break
        out[q] = best
    return out


# ---------------------------------------------------------------------------
# ray / triangle batch intersection (Moller-Trumbore), used by the emboss
# self-intersection guard.  Returns the smallest positive hit distance per
# ray, or +inf when nothing is hit.

def _ray_hits_np(origins, directions, tri_pts, skip_mask):
    nr = len(origins)
    out = np.full(nr, np.inf)
    v0 = tri_pts[:, 0]
    e1 = tri_pts[:, 1] - v0
    e2 = tri_pts[:, 2] - v0
    for r in range(nr):
        o = origins[r]
        d = directions[r]
        pvec = np.cross(d, e2)
        det = np.einsum("ij,ij->i", e1, pvec)
        ok = np.abs(det) > 1e-12
        if skip_mask is not None:
            ok &= ~skip_mask[r]
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tvec = o - v0
        u = np.einsum("ij,ij->i", tvec, pvec) * inv
        qvec = np.cross(tvec, e1)
        v = np.einsum("j,ij->i", d, qvec) * inv
        t = np.einsum("ij,ij->i", e2, qvec) * inv
        hit = ok & (u >= -1e-9) & (v >= -1e-9) & (u + v <= 1 + 1e-9) & (t > 1e-9)
        if np.any(hit):
            out[r] = t[hit].min()
    return out


def _ray_hits_nb(origins, directions, tri_pts, skip_mask):
    nr = origins.shape[0]
    nt = tri_pts.shape[0]
    out = np.full(nr, np.inf)
    for r in range(nr):
        ox = origins[r, 0]
        oy = origins[r, 1]
        oz = origins[r, 2]
        dx = directions[r, 0]
        dy = directions[r, 1]
        dz = directions[r, 2]
        best = np.inf
        for t_i in range(nt):
            if skip_mask is not None and skip_mask[r, t_i]:
                continue
            ax = tri_pts[t_i, 0, 0]
            ay = tri_pts[t_i, 0, 1]
            az = tri_pts[t_i, 0, 2]
            e1x = tri_pts[t_i, 1, 0] - ax
            e1y = tri_pts[t_i, 1, 1] - ay
            e1z = tri_pts[t_i, 1, 2] - az
            e2x = tri_pts[t_i, 2, 0] - ax
            e2y = tri_pts[t_i, 2, 1] - ay
            e2z = tri_pts[t_i, 2, 2] - az
            px = dy * e2z - dz * e2y
            py = dz * e2x - dx * e2z
            pz = dx * e2y - dy * e2x
            det = e1x * px + e1y * py + e1z * pz
            if abs(det) <= 1e-12:
                continue
            inv = 1.0 / det
            tx = ox - ax
            ty = oy - ay
            tz = oz - az
            u = (tx * px + ty * py + tz * pz) * inv
            if u < -1e-9 or u > 1 + 1e-9:
                continue
            qx = ty * e1z - tz * e1y
            qy = tz * e1x - tx * e1z
            qz = tx * e1y - ty * e1x
            v = (dx * qx + dy * qy + dz * qz) * inv
            if v < -1e-9 or u + v > 1 + 1e-9:
                continue
            t = (e2x * qx + e2y * qy + e2z * qz) * inv
            if t > 1e-9 and t < best:
                best = t
        out[r] = best
    return out


if USING_NUMBA:
    corner_angles = njit(cache=True)(_corner_angles_nb)
    arap_local = njit(cache=True)(_arap_local_nb)
    arap_rhs = njit(cache=True)(_arap_rhs_nb)
    locate_points = njit(cache=True)(_locate_points_nb)
    _ray_hits_jit = njit(cache=True)(_ray_hits_nb)

    def ray_hits(origins, directions, tri_pts, skip_mask=None):
        if skip_mask is None:
            skip_mask = np.zeros((len(origins), len(tri_pts)), dtype=np.bool_)
        return _ray_hits_jit(origins, directions, tri_pts, skip_mask)
else:
    corner_angles = _corner_angles_np
    arap_local = _arap_local_np
    arap_rhs = _arap_rhs_np
    locate_points = _locate_points_np

    def ray_hits(origins, directions, tri_pts, skip_mask=None):
        return _ray_hits_np(origins, directions, tri_pts, skip_mask)
