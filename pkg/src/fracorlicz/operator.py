"""Fractional divergence, fractional g-Laplacian and the weak pairing.

Pairs ``(x, y)`` with ``|x - y| <= R`` are summed on the lattice; for
``|x - y| > R`` the zero exterior value makes the radial integrals explicit.
With ``T = |v| / R^s`` and ``S = N * omega_N`` (surface of the unit sphere)
the far-field integrals are closed forms in ``G``::

    2 S int_R^inf g(v / r^s) r^(-1-s) dr      = 2 S G(T) / (s R^s T)
    2 S int_R^inf G(v / r^s) r^(-1) dr        = (2 S / s) int_0^T G(tau) / tau dtau
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import DomainError, SingularityWarning
from .grid import Grid, GridFunction, unit_ball_measure
from .orlicz import Kind, OrliczFamily, eval_g, _base_G, _base_g

__all__ = [
    "PairKernel",
    "IBPResult",
    "frac_divergence",
    "apply_pointwise",
    "pointwise_operator",
    "tail_integral",
    "tail_modular",
    "tail_hessian",
    "weak_pairing",
    "integration_by_parts",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(80)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _sphere(N: int) -> float:
    return N * unit_ball_measure(N)


def _base_J(fam: OrliczFamily, T: np.ndarray) -> np.ndarray:
    """``int_0^T G(tau) / tau dtau`` for the unscaled family."""
    a, b = fam.a, fam.b
    if fam.kind is Kind.POWER:
        return T**a / a**2
    if fam.kind is Kind.SUMPOWERS:
        return T**a / a + T**b / b
    # powerlog: tau = T x, integrand T^a x^(a-1) log(1 + T x)
    x = _GL_X[None, :]
    Tc = T[..., None]
    return np.sum(_GL_W * Tc**a * x ** (a - 1.0) * np.log1p(Tc * x), axis=-1)


def tail_integral(fam: OrliczFamily, u_x, s: float, R: float, N: int = 1):
    """Far-field part of the operator at a node with value ``u_x``.

    ``2 * int_{|y - x| > R} g((u_x - 0) / |x - y|^s) |x - y|^(-N-s) dy``.
    Odd in ``u_x``; scales like ``R**(-s p)`` for ``power:p``.
    """
    v = np.asarray(u_x, dtype=float)
    if R <= 0:
        raise DomainError("R must be positive")
    T = np.abs(v) / R**s
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = _base_G(fam.kind, fam.a, fam.b, T) / T
    ratio = np.where(T > 0, ratio, 0.0)
    out = np.sign(v) * fam.scale * 2.0 * _sphere(N) * ratio / (s * R**s)
    return float(out) if np.ndim(u_x) == 0 else out


def tail_modular(fam: OrliczFamily, u_x, s: float, R: float, N: int = 1):
    """Far-field modular per unit cell: both ordered pairs ``(x, y)``, ``(y, x)``."""
    T = np.abs(np.asarray(u_x, dtype=float)) / R**s
    out = fam.scale * 2.0 * _sphere(N) / s * _base_J(fam, np.atleast_1d(T)).reshape(T.shape)
    return float(out) if np.ndim(u_x) == 0 else out


def tail_hessian(fam: OrliczFamily, u_x, s: float, R: float, N: int = 1):
    """Derivative of `tail_integral` with respect to ``u_x``."""
    T = np.abs(np.asarray(u_x, dtype=float)) / R**s
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (T * _base_g(fam.kind, fam.a, fam.b, T) - _base_G(fam.kind, fam.a, fam.b, T)) / T**2
    if fam.kind is Kind.POWER:
        g0 = 1.0 if fam.a == 2.0 else 0.0
    elif fam.kind is Kind.SUMPOWERS:
        g0 = 2.0 * (fam.a == 2.0) + 2.0 * (fam.b == 2.0)
    else:
        g0 = 0.0
    val = np.where(T > 0, val, 0.5 * g0)
    out = fam.scale * 2.0 * _sphere(N) / (s * R ** (2 * s)) * val
    return float(out) if np.ndim(u_x) == 0 else out


# ---------------------------------------------------------------------------
# pair kernels


def _pair_geometry(grid: Grid):
    """Dense ``r^s`` and ``r^-N`` (0 outside the pair set) over all node pairs."""
    _, rs_tab, w_tab = grid.offset_tables
    lat = grid.lattice
    d0 = np.abs(lat[:, None, 0] - lat[None, :, 0])
    d1 = np.abs(lat[:, None, 1] - lat[None, :, 1])
    return rs_tab[d0, d1], w_tab[d0, d1]


@dataclass(frozen=True, eq=False)
class PairKernel:
    """A function ``phi(x_i, x_j)`` on ordered node pairs, stored densely.

    Entries outside the pair set (``i == j`` or ``|x_i - x_j| > R``) are
    ignored. Dense storage restricts this to small grids.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        M = self.grid.n_nodes
        if self.values.shape != (M, M):
            raise ValueError(f"pair kernel needs shape {(M, M)}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("pair kernel entries must be finite")

    @classmethod
    def holder(cls, u: GridFunction, fam: OrliczFamily | None = None) -> PairKernel:
        """``D^s u`` (or ``g(D^s u)`` when ``fam`` is given)."""
        rs, _ = _pair_geometry(u.grid)
        D = (u.values[:, None] - u.values[None, :]) / rs
        np.fill_diagonal(D, 0.0)
        return cls(u.grid, D if fam is None else np.asarray(eval_g(fam, D)))


def frac_divergence(phi: PairKernel) -> GridFunction:
    """``div^s phi(x_i) = sum_{j != i} (phi(j, i) - phi(i, j)) c_j / r^(N+s)``."""
    grid = phi.grid
    rs, w = _pair_geometry(grid)
    K = w / rs * grid.cell_measures[None, :]
    vals = np.sum((phi.values.T - phi.values) * K, axis=1)
    return GridFunction(grid, vals)


class IBPResult(NamedTuple):
    lhs: float
    rhs: float
    relative_gap: float


def integration_by_parts(phi: PairKernel, v: GridFunction) -> IBPResult:
    """Compare ``sum_i div^s phi(i) v_i c_i`` with ``-sum_ij phi D^s v dmu``."""
    grid = phi.grid
    rs, w = _pair_geometry(grid)
    c = grid.cell_measures
    lhs = float(np.sum(frac_divergence(phi).values * v.values * c))
    Dv = (v.values[:, None] - v.values[None, :]) / rs
    rhs = -float(np.sum(phi.values * Dv * w * c[:, None] * c[None, :]))
    scale = max(abs(lhs), abs(rhs), np.finfo(float).tiny)
    return IBPResult(lhs, rhs, abs(lhs - rhs) / scale)


# ---------------------------------------------------------------------------
# pointwise operator


def _check_regime(fam: OrliczFamily, s: float) -> None:
    if not (fam.p_minus >= 2.0 or fam.p_minus > 1.0 / (1.0 - s)):
        warnings.warn(
            f"p_minus = {fam.p_minus} is below both 2 and 1/(1-s) = {1 / (1 - s):.3g}; "
            "the pointwise operator may not converge under refinement",
            SingularityWarning,
            stacklevel=3,
        )


def apply_pointwise(fam: OrliczFamily, u: GridFunction, i: int) -> float:
    """``(-Delta_g)^s u(x_i)`` with the near field symmetrized over ``+-z``.

    Every lattice offset ``z`` within ``R`` is paired with ``-z``; the pair
    contributes ``(g(D^s u(x, x+z)) + g(D^s u(x, x-z))) / 2`` which cancels
    the leading singular part for smooth ``u``. Offsets whose mirror is not a
    lattice node fall back to the one-sided term. The far field uses
    `tail_integral` (``u = 0`` beyond ``R``).
    """
    grid = u.grid
    if not grid.interior_mask[i]:
        raise DomainError(f"node {i} is not interior")
    _check_regime(fam, grid.s)
    _, rs_tab, w_tab = grid.offset_tables
    lat = grid.lattice
    dk = lat - lat[i]
    ad = np.abs(dk)
    w = w_tab[ad[:, 0], ad[:, 1]]
    near = np.flatnonzero(w > 0)
    index = {tuple(k): n for n, k in enumerate(lat.tolist())}
    mirror = np.array([index.get(tuple((lat[i] - dk[j]).tolist()), -1) for j in near])
    rs = rs_tab[ad[near, 0], ad[near, 1]]
    g_fwd = eval_g(fam, (u.values[i] - u.values[near]) / rs)
    g_bwd = np.where(mirror >= 0, eval_g(fam, (u.values[i] - u.values[np.maximum(mirror, 0)]) / rs), g_fwd)
    kern = w[near] * grid.cell_measures[near] / rs
    near_sum = 2.0 * float(np.sum(0.5 * (g_fwd + g_bwd) * kern))
    far = tail_integral(fam, float(u.values[i]), grid.s, grid.R, grid.dimension)
    return near_sum + far


def pointwise_operator(fam: OrliczFamily, u: GridFunction, backend: str | None = None) -> GridFunction:
    """`apply_pointwise` at all interior nodes (plain sums, compiled kernel).

    On the full lattice the ``+-z`` symmetrization only reorders the sum, so
    this agrees with `apply_pointwise` up to rounding.
    """
    grid = u.grid
    _check_regime(fam, grid.s)
    _, op = kernels.energy_grad_rows(grid, u.values, fam.code, backend_name=backend)
    far = tail_integral(fam, u.interior_values, grid.s, grid.R, grid.dimension)
    return grid.from_interior(fam.scale * op + far)


def weak_pairing(fam: OrliczFamily, u: GridFunction, v: GridFunction, backend: str | None = None) -> float:
    """``<(-Delta_g)^s u, v> = sum_ij g(D^s u) D^s v dmu`` plus the far field."""
    u.require_zero_extended()
    v.require_zero_extended()
    grid = u.grid
    near = kernels.pairing_rows(grid, u.values, v.values, fam.code, backend_name=backend)
    far = tail_integral(fam, u.interior_values, grid.s, grid.R, grid.dimension)
    c = grid.cell_measures[grid.interior]
    return float(fam.scale * np.sum(near) + np.sum(far * v.interior_values * c))
