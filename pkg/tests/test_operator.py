from __future__ import annotations

import math
import os
import subprocess
import sys
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from fracorlicz import OrliczFamily, SingularityWarning, build_grid, dist_oracle, kernels
from fracorlicz.modulars import modular_Phi_sG
from fracorlicz.operator import (
    PairKernel,
    apply_pointwise,
    frac_divergence,
    integration_by_parts,
    pointwise_operator,
    tail_hessian,
    tail_integral,
    tail_modular,
    weak_pairing,
)
from fracorlicz.orlicz import eval_G, eval_g

from conftest import random_u

FAMS = [
    OrliczFamily.power(2),
    OrliczFamily.power(8),
    OrliczFamily.sum_of_powers(4, 6),
    OrliczFamily.power_log(3),
    OrliczFamily.power(16).normalized(),
]


def brute_pairs(grid):
    """All ordered pairs (i, j), i != j, |x_i - x_j| <= R, by explicit loops over nodes."""
    x = grid.nodes
    M = grid.n_nodes
    r = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))
    mask = (r > 0) & (r <= grid.R * (1 + 1e-12))
    np.fill_diagonal(r, 1.0)
    return r, mask


def brute_modular(fam, u):
    g = u.grid
    r, mask = brute_pairs(g)
    D = (u.values[:, None] - u.values[None, :]) / r**g.s
    c = g.cell_measures
    near = np.sum(np.where(mask, eval_G(fam, D) * c[:, None] * c[None, :] / r**g.dimension, 0.0))
    far = np.sum(tail_modular(fam, u.interior_values, g.s, g.R, g.dimension) * c[g.interior])
    return near + far


def brute_operator(fam, u):
    g = u.grid
    r, mask = brute_pairs(g)
    D = (u.values[:, None] - u.values[None, :]) / r**g.s
    c = g.cell_measures
    K = np.where(mask, eval_g(fam, D) * c[None, :] / r ** (g.dimension + g.s), 0.0)
    near = 2.0 * K.sum(axis=1)[g.interior]
    return near + tail_integral(fam, u.interior_values, g.s, g.R, g.dimension)


# --- kernels vs brute force, backend parity --------------------------------


@pytest.mark.parametrize("fam", FAMS, ids=str)
@pytest.mark.parametrize("spec,n", [("interval:-1,1", 31), ("disk:r=1", 8)])
def test_modular_matches_double_sum(fam, spec, n, rng):
    g = build_grid(spec, n, 0.4)
    u = random_u(g, rng, 0.8)
    assert modular_Phi_sG(fam, u) == pytest.approx(brute_modular(fam, u), rel=1e-12)


@pytest.mark.parametrize("fam", FAMS, ids=str)
def test_operator_matches_double_sum(fam, grid_small, rng):
    u = random_u(grid_small, rng, 0.8)
    np.testing.assert_allclose(pointwise_operator(fam, u).interior_values, brute_operator(fam, u), rtol=1e-11, atol=1e-13)


@pytest.mark.parametrize("fam", FAMS, ids=str)
@pytest.mark.parametrize("spec,n", [("interval:-1,1", 41), ("box:-1,1,-1,1", 8)])
def test_backends_agree(fam, spec, n, rng):
    g = build_grid(spec, n, 0.6)
    u = random_u(g, rng).values
    v = random_u(g, rng).values
    e1, o1 = kernels.energy_grad_rows(g, u, fam.code, backend_name="numba")
    e2, o2 = kernels.energy_grad_rows(g, u, fam.code, backend_name="numpy")
    np.testing.assert_allclose(e1, e2, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(o1, o2, rtol=1e-11, atol=1e-14)
    h1 = kernels.hessian_rows(g, u, fam.code, backend_name="numba")
    h2 = kernels.hessian_rows(g, u, fam.code, backend_name="numpy")
    np.testing.assert_allclose(h1, h2, rtol=1e-11, atol=1e-12 * np.abs(h2).max())
    p1 = kernels.pairing_rows(g, u, v, fam.code, backend_name="numba")
    p2 = kernels.pairing_rows(g, u, v, fam.code, backend_name="numpy")
    np.testing.assert_allclose(p1, p2, rtol=1e-11, atol=1e-14)
    q1 = kernels.quotient_extrema(g, u, backend_name="numba")
    q2 = kernels.quotient_extrema(g, u, backend_name="numpy")
    for a, b in zip(q1, q2):
        np.testing.assert_allclose(a, b, rtol=1e-14)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.backend("cuda")


def test_constant_function_has_zero_near_field():
    g = build_grid("interval:-1,1", 21, 0.5)
    u = np.full(g.n_nodes, 2.5)  # not zero extended: synthetic all-interior setting
    _, op = kernels.energy_grad_rows(g, u, OrliczFamily.power(4).code)
    np.testing.assert_array_equal(op, 0.0)
    phi = PairKernel.holder(g.sample(lambda p: np.full(len(p), 2.5), zero_extend=False))
    assert np.all(phi.values == 0.0)


# --- tails ----------------------------------------------------------------


@pytest.mark.parametrize("fam", FAMS, ids=str)
@pytest.mark.parametrize("N", [1, 2])
def test_tails_match_quadrature(fam, N):
    s, R, v = 0.5, 4.0, 1.3
    S = 2.0 if N == 1 else 2 * math.pi
    ti, _ = quad(lambda r: eval_g(fam, v / r**s) * r ** (-1 - s), R, np.inf, epsabs=0, epsrel=1e-13, limit=200)
    tm, _ = quad(lambda r: eval_G(fam, v / r**s) / r, R, np.inf, epsabs=0, epsrel=1e-13, limit=200)
    assert tail_integral(fam, v, s, R, N) == pytest.approx(2 * S * ti, rel=1e-10)
    assert tail_modular(fam, v, s, R, N) == pytest.approx(2 * S * tm, rel=1e-10)
    h = 1e-5
    fd = (tail_integral(fam, v + h, s, R, N) - tail_integral(fam, v - h, s, R, N)) / (2 * h)
    assert tail_hessian(fam, v, s, R, N) == pytest.approx(fd, rel=1e-7)


def test_tail_examples():
    fam = OrliczFamily.power(2)
    assert tail_integral(fam, 0.0, 0.5, 4.0) == 0.0
    # 2 * |S^0| * int_4^inf r^-0.5 r^-1.5 dr = 4 * 1/4
    assert tail_integral(fam, 1.0, 0.5, 4.0) == pytest.approx(1.0, rel=1e-14)
    for p in (2, 4, 8):
        f = OrliczFamily.power(p)
        ratio = tail_integral(f, 0.7, 0.5, 8.0) / tail_integral(f, 0.7, 0.5, 4.0)
        assert ratio == pytest.approx(2.0 ** (-0.5 * p), rel=1e-13)


def test_tail_odd_and_vectorized():
    fam = OrliczFamily.sum_of_powers(4, 6)
    v = np.array([-0.5, 0.0, 0.5])
    t = tail_integral(fam, v, 0.3, 4.0)
    assert t.shape == (3,) and t[0] == -t[2] and t[1] == 0.0


# --- integration by parts, pointwise operator ------------------------------


def test_divergence_examples(grid_small, rng):
    g = grid_small
    M = g.n_nodes
    A = rng.normal(size=(M, M))
    sym = PairKernel(g, A + A.T)
    np.testing.assert_allclose(frac_divergence(sym).values, 0.0, atol=1e-12)
    assert np.all(frac_divergence(PairKernel(g, np.zeros((M, M)))).values == 0.0)


def test_divergence_of_holder_is_minus_laplacian():
    g = build_grid("interval:-1,1", 41, 0.5)
    u = dist_oracle(g)
    fam = OrliczFamily.power(2)
    div = frac_divergence(PairKernel.holder(u, fam)).values[g.interior]
    op = pointwise_operator(fam, u).interior_values
    far = tail_integral(fam, u.interior_values, g.s, g.R)
    # for the antisymmetric g(D^s u), -div^s is exactly the near field of (-Delta)^s u
    np.testing.assert_allclose(-div, op - far, rtol=1e-11, atol=1e-11)


def test_integration_by_parts_random(grid_small, rng):
    g = grid_small
    for _ in range(10):
        phi = PairKernel(g, rng.normal(size=(g.n_nodes, g.n_nodes)))
        v = random_u(g, rng)
        assert integration_by_parts(phi, v).relative_gap <= 1e-12


def test_pairkernel_validation(grid_small):
    with pytest.raises(ValueError):
        PairKernel(grid_small, np.zeros((3, 3)))


@pytest.mark.parametrize("fam", FAMS[:4], ids=str)
def test_apply_pointwise_matches_vectorized(fam, grid_small, rng):
    u = random_u(grid_small, rng)
    vec = pointwise_operator(fam, u).values
    for i in grid_small.interior[::4]:
        assert apply_pointwise(fam, u, int(i)) == pytest.approx(vec[i], rel=1e-10, abs=1e-12)


def test_apply_pointwise_zero_and_exterior(grid_small):
    fam = OrliczFamily.power(4)
    assert apply_pointwise(fam, grid_small.zeros(), int(grid_small.interior[3])) == 0.0
    ext = int(np.flatnonzero(~grid_small.interior_mask)[0])
    with pytest.raises(ValueError):
        apply_pointwise(fam, grid_small.zeros(), ext)


def test_singular_regime_warns(grid_small):
    with pytest.warns(SingularityWarning):
        pointwise_operator(OrliczFamily.power(1.5), dist_oracle(grid_small))
    with warnings.catch_warnings():
        warnings.simplefilter("error", SingularityWarning)
        pointwise_operator(OrliczFamily.power(2), dist_oracle(grid_small))
        pointwise_operator(OrliczFamily.power(1.5), dist_oracle(build_grid("interval:-1,1", 21, 0.2)))


def _reference_laplacian(u, x, s):
    """``2 int (u(x) - u(y)) |x - y|^(-1-2s) dy`` by adaptive quadrature."""
    f = lambda z: (2 * u(x) - u(x + z) - u(x - z)) / z ** (1 + 2 * s)
    pts = sorted({abs(1 - x), abs(1 + x)})
    total = 0.0
    edges = [0.0, *pts, np.inf]
    for a, b in zip(edges, edges[1:]):
        val, _ = quad(f, a, b, epsabs=1e-12, epsrel=1e-12, limit=400)
        total += val
    return 2.0 * total


@pytest.mark.parametrize("s", [0.3, 0.5])
def test_fractional_laplacian_of_bump(s):
    fam = OrliczFamily.power(2)
    g = build_grid("interval:-1,1", 201, s)
    bump = lambda x: np.where(np.abs(x) < 1, (1 - np.asarray(x) ** 2) ** 2, 0.0)
    u = g.sample(lambda p: bump(p[:, 0]))
    op = pointwise_operator(fam, u)
    x = g.nodes[:, 0]
    for x0 in (-0.3, 0.0, 0.25):
        i = int(np.argmin(np.abs(x - x0)))
        ref = _reference_laplacian(lambda y: float(bump(y)), float(x[i]), s)
        assert op.values[i] == pytest.approx(ref, rel=0.02)


# --- weak pairing -----------------------------------------------------------


def test_weak_pairing_examples(grid_small, rng):
    u = random_u(grid_small, rng)
    v = random_u(grid_small, rng)
    for fam in FAMS:
        assert weak_pairing(fam, u, grid_small.zeros()) == 0.0
        pm = fam.p_minus
        assert weak_pairing(fam, u, u) >= pm * modular_Phi_sG(fam, u) * (1 - 1e-12)
    p2 = OrliczFamily.power(2)
    assert weak_pairing(p2, u, v) == pytest.approx(weak_pairing(p2, v, u), rel=1e-12)


def test_weak_pairing_equals_operator_moment(grid_small, rng):
    u = random_u(grid_small, rng)
    v = random_u(grid_small, rng)
    fam = OrliczFamily.sum_of_powers(4, 6)
    op = pointwise_operator(fam, u)
    c = grid_small.cell_measures[grid_small.interior]
    assert weak_pairing(fam, u, v) == pytest.approx(float(np.sum(op.interior_values * v.interior_values * c)), rel=1e-11)


def test_env_flag_selects_numpy_backend():
    code = "import fracorlicz.kernels as k; print(k.backend())"
    env = dict(os.environ, FRACORLICZ_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env.pop("FRACORLICZ_DISABLE_NUMBA")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numba"
