"""Benchmark the hot kernels: numba-jitted loops vs the numpy fallback.

Runs every kernel pair from ``meshtex._kernels`` on a representative
workload, checks the two implementations agree, and prints a timing
table.  Both paths are compiled/executed in this one process, so the
``MESHTEX_NUMBA`` environment flag does not matter here.

Usage::

    python3 benchmarks/bench_kernels.py [--subdiv N] [--repeat R]
"""
from __future__ import annotations

import argparse
import time

import numpy as np
from numba import njit

from meshtex import _kernels as kernels
from meshtex.shapes import icosphere


def _best_of(fn, args, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def _workloads(subdiv: int):
    mesh = icosphere(10.0, subdivisions=subdiv)
    positions = mesh.positions
    faces = mesh.faces
    m = len(faces)
    nv = len(positions)
    rng = np.random.default_rng(11)

    # A plausible flattening state: xy-projected vertices, per-face local
    # edges from the 3D geometry, positive cotangent weights.
    uv = positions[:, :2].copy()
    eloc = np.empty((m, 3, 2))
    for k in range(3):
        edge = positions[faces[:, (k + 1) % 3]] - positions[faces[:, k]]
        eloc[:, k, 0] = np.linalg.norm(edge, axis=1)
        eloc[:, k, 1] = rng.normal(0.0, 0.1, m)
    cot = rng.uniform(0.2, 2.0, (m, 3))
    rot, _ = kernels._arap_local_np(uv, faces, eloc, cot)

    # Point location: queries against candidate face lists of grid-bucket
    # size, like the chart locator produces.
    nq = 20000
    points = rng.uniform(-10.0, 10.0, (nq, 2))
    counts = rng.integers(4, 12, nq)
    cand_off = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    cand_idx = rng.integers(0, m, int(cand_off[-1])).astype(np.int64)
    tri_uv = np.ascontiguousarray(positions[faces][:, :, :2])

    # Emboss guard rays against a face-subset batch.
    nr, nt = 400, 3000
    tri_pts = positions[faces[rng.integers(0, m, nt)]]
    origins = positions[faces[rng.integers(0, m, nr), 0]]
    directions = rng.normal(0.0, 1.0, (nr, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    skip = np.zeros((nr, nt), dtype=np.bool_)

    def same_local(a, b):
        return (np.allclose(a[0], b[0], atol=1e-9)
                and abs(a[1] - b[1]) <= 1e-6 * max(1.0, abs(a[1])))

    return [
        ("corner_angles (%d faces)" % m,
         kernels._corner_angles_np, kernels._corner_angles_nb,
         (positions, faces),
         lambda a, b: np.allclose(a, b, atol=1e-12)),
        ("arap_local (%d faces)" % m,
         kernels._arap_local_np, kernels._arap_local_nb,
         (uv, faces, eloc, cot),
         same_local),
        ("arap_rhs (%d faces)" % m,
         kernels._arap_rhs_np, kernels._arap_rhs_nb,
         (rot, faces, eloc, cot, nv),
         lambda a, b: np.allclose(a, b, atol=1e-9)),
        ("locate_points (%d queries)" % nq,
         kernels._locate_points_np, kernels._locate_points_nb,
         (points, tri_uv, cand_off, cand_idx, 1e-9),
         lambda a, b: np.array_equal(a, b)),
        ("ray_hits (%dx%d)" % (nr, nt),
         kernels._ray_hits_np, kernels._ray_hits_nb,
         (origins, directions, tri_pts, skip),
         lambda a, b: np.allclose(a, b)),
    ]


def main() -> None:
    parser = argparse.ArgumentParser(
        description="compare jitted and numpy kernel implementations")
    parser.add_argument("--subdiv", type=int, default=5,
                        help="icosphere subdivisions for the mesh workload")
    parser.add_argument("--repeat", type=int, default=5,
                        help="timing repetitions (best-of)")
    args = parser.parse_args()

    print("%-28s %12s %12s %10s  %s"
          % ("kernel", "numpy [ms]", "numba [ms]", "speedup", "agree"))
    for name, fn_np, fn_nb, call_args, check in _workloads(args.subdiv):
        jitted = njit(cache=True)(fn_nb)
        out_np = fn_np(*call_args)
        out_nb = jitted(*call_args)  # compile + first run
        ok = check(out_np, out_nb)
        t_np = _best_of(fn_np, call_args, args.repeat)
        t_nb = _best_of(jitted, call_args, args.repeat)
        print("%-28s %12.2f %12.2f %9.1fx  %s"
              % (name, 1e3 * t_np, 1e3 * t_nb, t_np / t_nb,
                 "yes" if ok else "NO"))
        if not ok:
            raise SystemExit("kernel implementations disagree: %s" % name)


if __name__ == "__main__":
    main()
