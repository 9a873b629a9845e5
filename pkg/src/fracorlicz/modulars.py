"""Modulars, Luxemburg norms and the embedding / Poincare constants."""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from . import kernels
from .errors import DomainError, NumericError
from .grid import Grid, GridFunction, unit_ball_measure
from .operator import tail_modular
from .orlicz import OrliczFamily, eval_G, eval_G_star

__all__ = [
    "LuxemburgResult",
    "CheckResult",
    "modular_Phi_G",
    "modular_Phi_sG",
    "modular_Phi_G_star",
    "luxemburg",
    "norm_G",
    "seminorm_sG",
    "seminorm_tq",
    "lebesgue_norm",
    "embedding_constant",
    "inclusion_constant",
    "poincare_constant",
    "poincare_check",
    "holder_inequality_check",
]


class LuxemburgResult(NamedTuple):
    value: float
    modular_at_value: float
    iterations: int


class CheckResult(NamedTuple):
    lhs: float
    rhs: float
    passed: bool


def modular_Phi_G(fam: OrliczFamily, u: GridFunction) -> float:
    """``sum_i G(u_i) c_i`` over interior nodes."""
    idx = u.grid.interior
    return float(np.sum(eval_G(fam, u.values[idx]) * u.grid.cell_measures[idx]))


def modular_Phi_G_star(fam: OrliczFamily, u: GridFunction) -> float:
    """``sum_i G*(u_i) c_i`` over interior nodes."""
    idx = u.grid.interior
    return float(np.sum(eval_G_star(fam, u.values[idx]) * u.grid.cell_measures[idx]))


def modular_Phi_sG(fam: OrliczFamily, u: GridFunction, backend: str | None = None) -> float:
    """``sum_{i != j} G(D^s u(i, j)) dmu(i, j)`` over ordered pairs, plus the far field."""
    u.require_zero_extended()
    grid = u.grid
    en, _ = kernels.energy_grad_rows(grid, u.values, fam.code, backend_name=backend)
    far = tail_modular(fam, u.interior_values, grid.s, grid.R, grid.dimension)
    return float(fam.scale * np.sum(en) + np.sum(far * grid.cell_measures[grid.interior]))


_MODULARS: dict[str, Callable] = {
    "G": modular_Phi_G,
    "sG": modular_Phi_sG,
    "G*": modular_Phi_G_star,
}


def luxemburg(
    which: str, fam: OrliczFamily, u: GridFunction, rtol: float = 1e-12, max_iter: int = 400
) -> LuxemburgResult:
    """``inf{lam > 0 : Phi(u / lam) <= 1}`` by bisection in ``log lam``.

    Parameters
    ----------
    which : {"G", "sG", "G*"}
        Which modular: ``Phi_G``, ``Phi_{s,G}`` or ``Phi_{G*}``.
    rtol : float
        Relative width of the final bracket.
    """
    try:
        modular = _MODULARS[which]
    except KeyError:
        raise ValueError(f"unknown modular {which!r}; expected one of {sorted(_MODULARS)}") from None
    scale = float(np.max(np.abs(u.values)))
    if scale == 0.0:
        return LuxemburgResult(0.0, 0.0, 0)

    def phi(lam):
        return modular(fam, u / lam)

    lo = hi = scale
    f_lo = f_hi = phi(scale)
    it = 0
    while f_hi > 1.0:
        lo, f_lo = hi, f_hi
        hi *= 2.0
        f_hi = phi(hi)
        it += 1
        if it > max_iter or f_hi > f_lo:
            raise NumericError(f"Luxemburg bracket failed for {fam} (Phi = {f_hi} at lam = {hi})")
    while f_lo <= 1.0:
        hi, f_hi = lo, f_lo
        if f_hi == 1.0:
            return LuxemburgResult(hi, 1.0, it)
        lo *= 0.5
        f_lo = phi(lo)
        it += 1
        if it > max_iter or f_lo < f_hi:
            raise NumericError(f"Luxemburg bracket failed for {fam} (Phi = {f_lo} at lam = {lo})")
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        f_mid = phi(mid)
        it += 1
        if f_mid > 1.0:
            lo = mid
        else:
            hi, f_hi = mid, f_mid
        if it > max_iter:
            raise NumericError("Luxemburg bisection did not converge")
    return LuxemburgResult(hi, f_hi, it)


def norm_G(fam: OrliczFamily, u: GridFunction) -> float:
    return luxemburg("G", fam, u).value


def seminorm_sG(fam: OrliczFamily, u: GridFunction) -> float:
    return luxemburg("sG", fam, u).value


def lebesgue_norm(u: GridFunction, r: float) -> float:
    """Discrete ``L^r(Omega)`` norm; ``r = inf`` gives the max norm."""
    idx = u.grid.interior
    vals = np.abs(u.values[idx])
    if math.isinf(r):
        return float(vals.max(initial=0.0))
    if r < 1:
        raise DomainError(f"r must be >= 1, got {r}")
    return float(np.sum(vals**r * u.grid.cell_measures[idx]) ** (1.0 / r))


def seminorm_tq(u: GridFunction, t: float, q: float) -> float:
    """``(sum_{i != j in Omega} |D^t u(i, j)|^q dmu)^(1/q)``, interior pairs only."""
    grid = u.grid
    if not 0.0 < t < grid.s:
        raise DomainError(f"t must lie in (0, s) = (0, {grid.s}), got {t}")
    if q < 1:
        raise DomainError(f"q must be >= 1, got {q}")
    idx = grid.interior
    x = grid.nodes[idx]
    vals = u.values[idx]
    c = grid.cell_measures[idx]
    N = grid.dimension
    total = 0.0
    step = max(1, (1 << 20) // max(idx.size, 1))
    for start in range(0, idx.size, step):
        sl = slice(start, min(idx.size, start + step))
        r = np.linalg.norm(x[sl, None, :] - x[None, :, :], axis=2)
        r[np.arange(sl.stop - sl.start), np.arange(sl.start, sl.stop)] = np.inf
        D = np.abs(vals[sl, None] - vals[None, :]) / r**t
        total += float(np.sum(D**q * c[sl, None] * c[None, :] / r**N))
    return total ** (1.0 / q)


def embedding_constant(grid: Grid, q: float, t: float) -> float:
    """``(|Omega| N omega_N / (q (s - t)) + 1)^(1/q) * d^(s - t)``."""
    s = grid.s
    if not 0.0 < t < s:
        raise DomainError(f"t must lie in (0, s), got {t}")
    N = grid.dimension
    dom = grid.domain
    return (dom.measure * N * unit_ball_measure(N) / (q * (s - t)) + 1.0) ** (1.0 / q) * dom.diameter ** (s - t)


def inclusion_constant(measure: float, p_minus: float, p_plus: float, r: float) -> float:
    """Constant of ``||u||_G <= C ||u||_r`` for ``r >= p_plus``.

    ``C = max{1, |Omega|^(1/p- - 1/r) + |Omega|^(1/p- - (p+/p-)/r)}``.
    """
    inv_r = 0.0 if math.isinf(r) else 1.0 / r
    return max(1.0, measure ** (1.0 / p_minus - inv_r) + measure ** (1.0 / p_minus - p_plus / p_minus * inv_r))


def poincare_constant(fam: OrliczFamily, N: int, s: float) -> float:
    """``max{1, (s p+ / (N omega_N))^(1/p-)}``."""
    return max(1.0, (s * fam.p_plus / (N * unit_ball_measure(N))) ** (1.0 / fam.p_minus))


def poincare_check(fam: OrliczFamily, u: GridFunction) -> CheckResult:
    """``||u||_G <= C d^s [u]_{s,G}``."""
    u.require_zero_extended()
    grid = u.grid
    lhs = norm_G(fam, u)
    rhs = poincare_constant(fam, grid.dimension, grid.s) * grid.domain.diameter**grid.s * seminorm_sG(fam, u)
    return CheckResult(lhs, rhs, lhs <= rhs * (1 + 1e-10))


def holder_inequality_check(fam: OrliczFamily, u: GridFunction, v: GridFunction) -> CheckResult:
    """``sum |u v| c <= 2 ||u||_G ||v||_{G*}``."""
    idx = u.grid.interior
    lhs = float(np.sum(np.abs(u.values[idx] * v.values[idx]) * u.grid.cell_measures[idx]))
    rhs = 2.0 * norm_G(fam, u) * luxemburg("G*", fam, v).value
    return CheckResult(lhs, rhs, lhs <= rhs * (1 + 1e-10))
