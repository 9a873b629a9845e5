"""Acceptance suite: one check per primary criterion.

Every test records a single ``PASS`` / ``FAIL`` line (criterion, measured
value, tolerance, runtime); the lines are printed in the pytest terminal
summary and when this file is run as a script.

Limit-type criteria use the ``G(1) = 1`` normalization of each family
(``FamilySequence`` default); there the sequences are monotone in ``p``.
"""

from __future__ import annotations

import functools
import time

import numpy as np

from fracorlicz import OrliczFamily, SolverConfig, build_grid, certify_growth, dist_oracle, solve
from fracorlicz.grid import ridge_mask
from fracorlicz.limit import (
    FamilySequence,
    gamma_recovery_check,
    holder_constant,
    lambda_convergence_test,
    maximization_check,
    quotient_extrema,
)
from fracorlicz.modulars import lebesgue_norm, seminorm_sG
from fracorlicz.orlicz import default_samples
from fracorlicz.operator import PairKernel, integration_by_parts
from fracorlicz.solver import apriori_constant, comparison_check, energy, energy_gradient

RESULTS: list[str] = []

# frozen after the first verified sweep (observed worst p = 64 error 0.0417 at s = 0.3)
CONVERGENCE_P64_THRESHOLD = 0.05
SWEEP_S = (0.3, 0.5, 0.8)
SWEEP_P = (4, 8, 16, 32, 64)


def record(name: str, passed: bool, detail: str, t0: float) -> None:
    RESULTS.append(f"{'PASS' if passed else 'FAIL'}  {name}: {detail} [{time.perf_counter() - t0:.2f} s]")
    assert passed, f"{name}: {detail}"


@functools.lru_cache(maxsize=None)
def sweep(s: float):
    grid = build_grid("interval:-1,1", 201, s, 4.0)
    f = grid.from_interior(np.ones(grid.n_interior))
    seq = FamilySequence.build("power", SWEEP_P)
    t0 = time.perf_counter()
    sols = [solve(fam, f, grid, SolverConfig()) for fam in seq]
    return grid, f, seq, sols, time.perf_counter() - t0


def test_orlicz_inequality_suite():
    t0 = time.perf_counter()
    fams = [
        OrliczFamily.power(4),
        OrliczFamily.power(32),
        OrliczFamily.sum_of_powers(2, 4),
        OrliczFamily.sum_of_powers(8, 12),
        OrliczFamily.power_log(5),
    ]
    worst = min(min(certify_growth(f, default_samples(10_000), rtol=1e-9).report.values()) for f in fams)
    dt = time.perf_counter() - t0
    record("orlicz inequalities", worst >= -1e-9 and dt < 10, f"worst log-slack {worst:.2e} >= -1e-9, 5 families x 1e4 samples", t0)


def test_integration_by_parts_exactness():
    t0 = time.perf_counter()
    g = build_grid("interval:-1,1", 101, 0.5)
    rng = np.random.default_rng(2024)
    gaps = []
    for _ in range(50):
        phi = PairKernel(g, rng.normal(size=(g.n_nodes, g.n_nodes)))
        v = g.from_interior(rng.normal(size=g.n_interior))
        gaps.append(integration_by_parts(phi, v).relative_gap)
    dt = time.perf_counter() - t0
    record("integration by parts", max(gaps) <= 1e-12 and dt < 5, f"max relative gap {max(gaps):.2e} <= 1e-12 on 50 pairs", t0)


def test_gradient_check():
    t0 = time.perf_counter()
    g = build_grid("interval:-1,1", 101, 0.5)
    rng = np.random.default_rng(99)
    worst = 0.0
    for fam in (OrliczFamily.power(8), OrliczFamily.sum_of_powers(4, 6)):
        f = g.from_interior(rng.uniform(-1, 1, g.n_interior))
        for _ in range(20):
            u = g.from_interior(rng.uniform(-0.6, 0.6, g.n_interior))
            d = g.from_interior(rng.normal(size=g.n_interior))
            h = 1e-5
            fd = (energy(fam, f, u + h * d) - energy(fam, f, u - h * d)) / (2 * h)
            an = float(np.dot(energy_gradient(fam, f, u).values, d.values))
            worst = max(worst, abs(fd - an) / abs(an))
    dt = time.perf_counter() - t0
    record("gradient check", worst < 1e-5 and dt < 10, f"max relative error {worst:.2e} < 1e-5 on 40 pairs", t0)


def test_linear_oracle():
    t0 = time.perf_counter()
    g = build_grid("interval:-1,1", 201, 0.5, 4.0)
    f = g.from_interior(np.ones(g.n_interior))
    res = solve(OrliczFamily.power(2), f, g)
    # independent assembly of the quadratic energy's matrix
    x, c, s, R = g.nodes[:, 0], g.cell_measures, g.s, g.R
    idx = g.interior
    r = np.abs(x[idx, None] - x[None, :])
    near = (r > 0) & (r <= R * (1 + 1e-12))
    k = np.where(near, c[idx, None] * c[None, :] / np.where(near, r, 1.0) ** (1 + 2 * s), 0.0)
    A = -2.0 * k[:, idx]
    A[np.diag_indices_from(A)] = 2.0 * k.sum(axis=1) + 2.0 * c[idx] / (s * R ** (2 * s))
    ref = np.linalg.solve(A, c[idx])
    err = float(np.max(np.abs(res.u.interior_values - ref)))
    dt = time.perf_counter() - t0
    record("linear oracle", err <= 1e-8 and dt < 30, f"sup error {err:.2e} <= 1e-8", t0)


def test_convergence_to_dist():
    t0 = time.perf_counter()
    lines, ok = [], True
    for s in SWEEP_S:
        grid, _, _, sols, _ = sweep(s)
        oracle = dist_oracle(grid).values
        errs = [float(np.max(np.abs(u.u.values - oracle))) for u in sols]
        dec = all(b < a for a, b in zip(errs, errs[1:]))
        ok &= dec and errs[-1] <= CONVERGENCE_P64_THRESHOLD and all(u.converged for u in sols)
        lines.append(f"s={s}: " + ",".join(f"{e:.4f}" for e in errs))
    dt = time.perf_counter() - t0
    ok &= dt < 600
    record("convergence to dist^s", ok, f"{'; '.join(lines)} (strictly decreasing, p=64 <= {CONVERGENCE_P64_THRESHOLD})", t0)


def test_apriori_bound():
    t0 = time.perf_counter()
    lines, ok = [], True
    for s in SWEEP_S:
        grid, f, seq, sols, _ = sweep(s)
        fnorm = lebesgue_norm(f, 2.0)
        bounds = [apriori_constant(fam, fnorm, 2.0, grid) for fam in seq]
        semis = [seminorm_sG(fam, r.u) for fam, r in zip(seq, sols)]
        ok &= all(a <= b for a, b in zip(semis, bounds))
        ok &= bounds[-1] <= 1.5 and all(b <= a for a, b in zip(bounds, bounds[1:])) and bounds[-1] >= 1.0
        lines.append(f"s={s}: bounds " + ",".join(f"{b:.3f}" for b in bounds) + f", max [u] {max(semis):.3f}")
    record("a-priori bound", ok, "; ".join(lines) + " ([u] <= bound, bound(64) <= 1.5, non-increasing to 1)", t0)


def test_limit_diagnostics():
    t0 = time.perf_counter()
    lines, ok = [], True
    for s in SWEEP_S:
        grid, _, _, sols, _ = sweep(s)
        u = sols[-1].u
        hc = holder_constant(u)
        hi, lo = quotient_extrema(u)
        keep = ~ridge_mask(grid)[grid.interior]
        lp, lm = float(hi[keep].max()), float(lo[keep].min())
        ok &= hc <= 1.1 and lp <= 1.1 and lm >= -1.1
        lines.append(f"s={s}: holder {hc:.4f}, max L+ {lp:.4f}, min L- {lm:.4f}")
    record("limit diagnostics at p=64", ok, "; ".join(lines) + " (bounds 1.1 / 1.1 / -1.1)", t0)


def test_lambda_convergence():
    t0 = time.perf_counter()
    g = build_grid("interval:-1,1", 201, 0.5, 4.0)
    phi = g.sample(lambda p: np.where(np.abs(p[:, 0]) < 0.5, (1 - (p[:, 0] / 0.5) ** 2) ** 2, 0.0))
    i = int(g.interior[np.argmin(np.abs(g.nodes[g.interior, 0]))])
    res = lambda_convergence_test(FamilySequence.build("power", [4, 8, 16, 32, 64, 128]), phi, i)
    gaps = res.gaps
    cf = max(abs(v - c) / c for v, c in zip(res.values, res.closed_form))
    ok = gaps[-1] <= 0.05 and all(b < a for a, b in zip(gaps, gaps[1:])) and cf <= 1e-8
    record(
        "lambda convergence",
        ok,
        f"gaps {','.join(f'{x:.4f}' for x in gaps)} (decreasing, p=128 <= 0.05); closed form rel err {cf:.1e} <= 1e-8",
        t0,
    )


def test_comparison_principle():
    t0 = time.perf_counter()
    g = build_grid("interval:-1,1", 201, 0.5, 4.0)
    rng = np.random.default_rng(7)
    fam = OrliczFamily.power(8)
    cfg = SolverConfig()
    worst, ok = -np.inf, True
    x = g.nodes[g.interior, 0]
    for _ in range(20):
        a = rng.normal(size=4)
        base = a[0] + a[1] * x + a[2] * np.cos(3 * x) + a[3] * x**2
        f1 = g.from_interior(base)
        f2 = g.from_interior(base + rng.uniform(0, 1) * rng.uniform(0, 1, g.n_interior))
        res = comparison_check(fam, f1, f2, g, cfg)
        worst = max(worst, res.worst_excess)
        ok &= res.passed
    dt = time.perf_counter() - t0
    record("comparison principle", ok and dt < 120, f"max(u1 - u2) = {worst:.2e} <= {10 * cfg.grad_tol:.0e} on 20 pairs", t0)


def test_gamma_recovery():
    t0 = time.perf_counter()
    g = build_grid("interval:-1,1", 201, 0.5, 4.0)
    res = gamma_recovery_check(FamilySequence.build("power", [8, 16, 32, 64]), dist_oracle(g))
    e = res.energies
    ok = all(b < a for a, b in zip(e, e[1:])) and e[-1] <= 0.05
    record("gamma recovery", ok, f"energies {','.join(f'{x:.4f}' for x in e)} (decreasing, p=64 <= 0.05)", t0)


def test_maximization():
    t0 = time.perf_counter()
    g = build_grid("interval:-1,1", 201, 0.5, 4.0)
    f = g.from_interior(np.ones(g.n_interior))
    d = dist_oracle(g)
    res = maximization_check(f, d, trials=100, seed=0)
    quad = d.integrate()
    ok = res.passed and abs(quad - 4.0 / 3.0) <= 1e-3
    record("maximization", ok, f"max gap {res.gap:.3e} <= 0 over 100 psi; quadrature {quad:.5f} vs 4/3 (tol 1e-3)", t0)


if __name__ == "__main__":  # pragma: no cover
    import sys

    tests = [v for k, v in list(globals().items()) if k.startswith("test_")]
    for t in tests:
        try:
            t()
        except AssertionError:
            pass
    print("\n".join(RESULTS))
    sys.exit(0 if all(r.startswith("PASS") for r in RESULTS) else 1)
