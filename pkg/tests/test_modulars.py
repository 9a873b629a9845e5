from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from fracorlicz import DomainError, OrliczFamily, build_grid, dist_oracle
from fracorlicz.modulars import (
    embedding_constant,
    holder_inequality_check,
    inclusion_constant,
    lebesgue_norm,
    luxemburg,
    modular_Phi_G,
    modular_Phi_G_star,
    modular_Phi_sG,
    norm_G,
    poincare_check,
    seminorm_sG,
    seminorm_tq,
)

from conftest import random_u


def test_Phi_G_examples(grid201):
    g = grid201
    p2 = OrliczFamily.power(2)
    assert modular_Phi_G(p2, g.zeros()) == 0.0
    one = g.from_interior(np.ones(g.n_interior))
    riemann = 0.5 * float(np.sum(g.cell_measures[g.interior]))
    assert modular_Phi_G(p2, one) == pytest.approx(riemann, rel=1e-14)
    assert modular_Phi_G(p2, one) == pytest.approx(1.0, rel=0.01)


@pytest.mark.parametrize("p", [2, 3.5, 8])
def test_Phi_G_power_homogeneity(p, grid101, rng):
    fam = OrliczFamily.power(p)
    u = random_u(grid101, rng)
    assert modular_Phi_G(fam, 2 * u) == pytest.approx(2**p * modular_Phi_G(fam, u), rel=1e-13)


def test_Phi_sG_examples(rng):
    g = build_grid("interval:-1,1", 41, 0.5)
    p2 = OrliczFamily.power(2)
    assert modular_Phi_sG(p2, g.zeros()) == 0.0
    u = random_u(g, rng)
    # independent double loop for the lattice part, quad for |x - y| > R
    x = g.nodes[:, 0]
    c = g.cell_measures
    near = 0.0
    for i in range(g.n_nodes):
        for j in range(g.n_nodes):
            r = abs(x[i] - x[j])
            if i != j and r <= g.R * (1 + 1e-12):
                near += ((u.values[i] - u.values[j]) / r**g.s) ** 2 * c[i] * c[j] / r
    far = 0.0
    for i in g.interior:
        v = u.values[i]
        val, _ = quad(lambda r: (v / r**g.s) ** 2 / r, g.R, np.inf, epsabs=0, epsrel=1e-13)
        far += 2 * 2 * val * c[i]  # two sides of x, ordered pairs (x, y) and (y, x)
    assert modular_Phi_sG(p2, u) == pytest.approx(0.5 * (near + far), rel=1e-12)
    for p in (2, 4, 7):
        fam = OrliczFamily.power(p)
        assert modular_Phi_sG(fam, 2 * u) == pytest.approx(2**p * modular_Phi_sG(fam, u), rel=1e-12)


def test_luxemburg_examples(grid201, rng):
    p2 = OrliczFamily.power(2)
    u = random_u(grid201, rng)
    l2 = lebesgue_norm(u, 2)
    assert norm_G(p2, u) == pytest.approx(l2 / math.sqrt(2), rel=1e-8)
    assert norm_G(p2, grid201.zeros()) == 0.0
    assert luxemburg("sG", p2, grid201.zeros()).value == 0.0
    for fam in (OrliczFamily.sum_of_powers(4, 6), OrliczFamily.power_log(3)):
        for which in ("G", "sG", "G*"):
            base = luxemburg(which, fam, u).value
            for c in (0.1, -3.0, 17.0):
                assert luxemburg(which, fam, c * u).value == pytest.approx(abs(c) * base, rel=1e-8)


def test_luxemburg_modular_at_value(grid101, rng):
    fam = OrliczFamily.sum_of_powers(4, 6)
    u = random_u(grid101, rng, 3.0)
    res = luxemburg("sG", fam, u)
    assert res.modular_at_value <= 1.0
    assert modular_Phi_sG(fam, u / (res.value * (1 - 1e-9))) > 1.0


def test_luxemburg_unknown_modular(grid101):
    with pytest.raises(ValueError):
        luxemburg("L2", OrliczFamily.power(2), grid101.zeros())


def test_triangle_inequality_random_pairs(grid101):
    rng = np.random.default_rng(7)
    for fam in (OrliczFamily.power(3), OrliczFamily.sum_of_powers(2, 4), OrliczFamily.power_log(3)):
        for _ in range(100 // 3 + 1):
            u = random_u(grid101, rng, rng.uniform(0.1, 5))
            v = random_u(grid101, rng, rng.uniform(0.1, 5))
            assert norm_G(fam, u + v) <= (norm_G(fam, u) + norm_G(fam, v)) * (1 + 1e-10)


def test_seminorm_tq_examples():
    g = build_grid("interval:-1,1", 31, 0.5)
    assert seminorm_tq(g.zeros(), 0.3, 2) == 0.0
    u = g.sample(lambda p: p[:, 0])
    x = g.nodes[g.interior, 0]
    c = g.cell_measures[g.interior]
    t, q = 0.3, 2.0
    total = 0.0
    for a in range(x.size):
        for b in range(x.size):
            if a != b:
                r = abs(x[a] - x[b])
                total += (abs(x[a] - x[b]) / r**t) ** q * c[a] * c[b] / r
    assert seminorm_tq(u, t, q) == pytest.approx(total ** (1 / q), rel=1e-12)
    with pytest.raises(DomainError):
        seminorm_tq(u, 0.5, 2)


@pytest.mark.parametrize("q", [2, 4, 8, 16])
@pytest.mark.parametrize("ratio", [0.8, 0.9])
def test_fractional_embedding_bound(q, ratio):
    g = build_grid("interval:-1,1", 61, 0.5)
    fam = OrliczFamily.power(20).normalized()
    t = ratio * g.s
    rng = np.random.default_rng(q)
    samples = [dist_oracle(g), *(random_u(g, rng, a) for a in (0.2, 1.0, 4.0))]
    for u in samples:
        assert seminorm_tq(u, t, q) <= embedding_constant(g, q, t) * seminorm_sG(fam, u)


def test_embedding_constant_limits():
    g = build_grid("interval:-1,1", 21, 0.5)
    d = g.domain.diameter
    for t in (0.2, 0.4):
        assert embedding_constant(g, 1e6, t) == pytest.approx(d ** (g.s - t), rel=1e-4)
    assert embedding_constant(g, 1e9, g.s - 1e-6) == pytest.approx(1.0, rel=1e-4)


@pytest.mark.parametrize(
    "fam", [OrliczFamily.power(4).normalized(), OrliczFamily.sum_of_powers(2, 4), OrliczFamily.power_log(3).normalized()], ids=str
)
def test_inclusion_lebesgue_into_orlicz(fam, grid101):
    rng = np.random.default_rng(3)
    C = lambda r: inclusion_constant(grid101.domain.measure, fam.p_minus, fam.p_plus, r)
    for _ in range(20):
        u = random_u(grid101, rng, rng.uniform(0.01, 10))
        for r in (fam.p_plus, 2 * fam.p_plus, math.inf):
            assert norm_G(fam, u) <= C(r) * lebesgue_norm(u, r) * (1 + 1e-10)


def test_poincare_examples(grid101):
    assert poincare_check(OrliczFamily.power(4), grid101.zeros()) == (0.0, 0.0, True)
    assert poincare_check(OrliczFamily.power(4), dist_oracle(grid101)).passed


def test_poincare_random(grid101):
    rng = np.random.default_rng(11)
    for fam in (OrliczFamily.power(4), OrliczFamily.sum_of_powers(4, 6), OrliczFamily.power(8).normalized()):
        for _ in range(10):
            assert poincare_check(fam, random_u(grid101, rng, rng.uniform(0.1, 5))).passed


def test_holder_inequality_examples(grid101, rng):
    p2 = OrliczFamily.power(2)
    assert holder_inequality_check(p2, grid101.zeros(), grid101.zeros()).passed
    u = random_u(grid101, rng)
    res = holder_inequality_check(p2, u, u)
    # ||u||_G = ||u||_2 / sqrt 2 and ||u||_{G*} = ||u||_2 / sqrt 2: rhs = ||u||_2^2 = lhs
    assert res.passed and res.rhs == pytest.approx(lebesgue_norm(u, 2) ** 2, rel=1e-8)
    for fam in (OrliczFamily.sum_of_powers(4, 6), OrliczFamily.power_log(5)):
        for _ in range(5):
            assert holder_inequality_check(fam, random_u(grid101, rng), random_u(grid101, rng, 3.0)).passed


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 20.0), st.integers(0, 10_000))
def test_norm_modular_relation(scale, seed):
    """``||u|| <= 1`` iff ``Phi(u) <= 1`` (unit ball property)."""
    g = build_grid("interval:-1,1", 21, 0.5)
    fam = OrliczFamily.sum_of_powers(2, 4)
    u = random_u(g, np.random.default_rng(seed), scale)
    assert (norm_G(fam, u) <= 1.0) == (modular_Phi_G(fam, u) <= 1.0 + 1e-9) or abs(norm_G(fam, u) - 1) < 1e-9


def test_Phi_G_star_conjugate(grid101, rng):
    fam = OrliczFamily.power(3)
    u = random_u(grid101, rng)
    dual = OrliczFamily.power(1.5)
    assert modular_Phi_G_star(fam, u) == pytest.approx(modular_Phi_G(dual, u), rel=1e-12)
