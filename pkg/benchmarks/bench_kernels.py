#!/usr/bin/env python3
"""Compare the numba and pure-numpy pairwise kernels.

Times one energy/gradient evaluation, one Hessian assembly and one full
solve on 1D and 2D grids for each backend, and checks that the backends
agree. Run with ``python3 benchmarks/bench_kernels.py [--repeat 5]``.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fracorlicz import OrliczFamily, SolverConfig, build_grid, kernels, solve
from fracorlicz.grid import dist_oracle


def best_of(func, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = func()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    fam = OrliczFamily.sum_of_powers(4, 6)
    cases = [("interval:-1,1", 101), ("interval:-1,1", 401), ("box:-1,1,-1,1", 16)]
    print(f"{'grid':>22} {'nodes':>6} {'op':>8} {'numba [ms]':>11} {'numpy [ms]':>11} {'speedup':>8} {'max diff':>9}")
    for spec, n in cases:
        grid = build_grid(spec, n, 0.5)
        u = dist_oracle(grid).values * 0.7
        ops = {
            "energy": lambda b: kernels.energy_grad_rows(grid, u, fam.code, backend_name=b)[1],
            "hessian": lambda b: kernels.hessian_rows(grid, u, fam.code, backend_name=b),
        }
        for name, op in ops.items():
            op("numba")  # compile outside the timing
            t_nb, r_nb = best_of(lambda: op("numba"), args.repeat)
            t_np, r_np = best_of(lambda: op("numpy"), args.repeat)
            diff = float(np.max(np.abs(r_nb - r_np)) / max(np.max(np.abs(r_np)), 1e-300))
            print(
                f"{spec:>22} {grid.n_nodes:6d} {name:>8} {1e3 * t_nb:11.2f} {1e3 * t_np:11.2f} "
                f"{t_np / t_nb:8.1f} {diff:9.1e}"
            )

    grid = build_grid("interval:-1,1", 201, 0.5)
    f = grid.from_interior(np.ones(grid.n_interior))
    for b in ("numba", "numpy"):
        t, res = best_of(lambda: solve(fam, f, grid, SolverConfig(backend=b)), 1)
        print(f"full solve, 201 nodes, {b:>5}: {t:.3f} s, {res.iterations} Newton steps, energy {res.energy:.12g}")


if __name__ == "__main__":
    main()
