"""Discrete Dirichlet problem ``(-Delta_g)^s u = f`` in the domain, ``u = 0`` outside.

The solution is the minimizer of the strictly convex energy
``E(u) = Phi_{s,G}(u) - sum_i f_i u_i c_i`` over zero-extended grid
functions, found by damped Newton with Armijo backtracking.
"""

from __future__ import annotations

import functools
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from . import kernels
from .errors import DomainError, NumericError, PropertyViolation
from .grid import Grid, GridFunction, dist_oracle
from .modulars import inclusion_constant, poincare_constant
from .operator import tail_hessian, tail_integral, tail_modular
from .orlicz import OrliczFamily, certify_growth

__all__ = [
    "SolverConfig",
    "SolveResult",
    "ComparisonResult",
    "energy",
    "energy_gradient",
    "hessian",
    "solve",
    "apriori_constant",
    "comparison_check",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """Optimizer settings.

    ``grad_tol`` bounds ``max_i |dE/du_i| / c_i``; ``newton_regularization``
    is added to the Hessian diagonal relative to its mean.
    """

    max_iters: int = 500
    grad_tol: float = 1e-9
    backtrack_factor: float = 0.5
    armijo_c: float = 1e-4
    newton_regularization: float = 0.0
    initial_guess: str = "dist_oracle_scaled"
    backend: str | None = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if not 0 < self.backtrack_factor < 1 or not 0 < self.armijo_c < 1:
            raise ValueError("backtrack_factor and armijo_c must lie in (0, 1)")
        if self.newton_regularization < 0:
            raise ValueError("newton_regularization must be >= 0")
        if self.initial_guess not in ("zero", "dist_oracle_scaled"):
            raise ValueError(f"unknown initial guess {self.initial_guess!r}")


@dataclass(frozen=True, eq=False)
class SolveResult:
    u: GridFunction
    energy: float
    grad_norm: float
    iterations: int
    converged: bool
    energies: tuple[float, ...] = field(default=())


class _Problem:
    """Energy, gradient and Hessian in terms of interior values."""

    def __init__(self, fam: OrliczFamily, f: GridFunction, backend: str | None = None):
        self.fam = fam
        self.grid = f.grid
        self.idx = self.grid.interior
        self.c = self.grid.cell_measures[self.idx]
        self.fc = f.values[self.idx] * self.c
        self.backend = backend
        g = self.grid
        self._tail = (g.s, g.R, g.dimension)

    def full(self, ui: np.ndarray) -> np.ndarray:
        u = np.zeros(self.grid.n_nodes)
        u[self.idx] = ui
        return u

    def energy_grad(self, ui: np.ndarray) -> tuple[float, np.ndarray]:
        fam = self.fam
        with np.errstate(over="ignore", invalid="ignore"):
            en, op = kernels.energy_grad_rows(self.grid, self.full(ui), fam.code, backend_name=self.backend)
            E = fam.scale * np.sum(en) + np.sum(tail_modular(fam, ui, *self._tail) * self.c)
            E -= float(np.dot(self.fc, ui))
            grad = self.c * (fam.scale * op + tail_integral(fam, ui, *self._tail)) - self.fc
        return float(E), grad

    def hessian(self, ui: np.ndarray) -> np.ndarray:
        fam = self.fam
        H = fam.scale * kernels.hessian_rows(self.grid, self.full(ui), fam.code, backend_name=self.backend)
        H[np.diag_indices_from(H)] += self.c * tail_hessian(fam, ui, *self._tail)
        return H

    def grad_norm(self, grad: np.ndarray) -> float:
        return float(np.max(np.abs(grad) / self.c))


def _interior(u: GridFunction) -> np.ndarray:
    u.require_zero_extended()
    return u.interior_values


def energy(fam: OrliczFamily, f: GridFunction, u: GridFunction) -> float:
    """``Phi_{s,G}(u) - sum_i f_i u_i c_i``."""
    return _Problem(fam, f).energy_grad(_interior(u))[0]


def energy_gradient(fam: OrliczFamily, f: GridFunction, u: GridFunction) -> GridFunction:
    """Partial derivatives of `energy` with respect to the interior values."""
    _, grad = _Problem(fam, f).energy_grad(_interior(u))
    return u.grid.from_interior(grad)


def hessian(fam: OrliczFamily, u: GridFunction) -> np.ndarray:
    """Hessian of ``Phi_{s,G}`` with respect to the interior values (dense)."""
    return _Problem(fam, u.grid.zeros()).hessian(_interior(u))


@functools.lru_cache(maxsize=64)
def _certified(fam: OrliczFamily) -> bool:
    certify_growth(fam)
    return True


def _line_minimum(prob: _Problem, base: np.ndarray, direction: np.ndarray) -> float:
    """Exact minimizer ``t`` of ``E(base + t direction)`` (convex in ``t``)."""

    def slope(t):
        _, g = prob.energy_grad(base + t * direction)
        val = float(np.dot(g, direction))
        return val if math.isfinite(val) else math.inf

    s0 = slope(0.0)
    if s0 == 0.0:
        return 0.0
    sign = 1.0 if s0 < 0 else -1.0
    hi = 1.0
    for _ in range(200):
        if sign * slope(sign * hi) >= 0:
            break
        hi *= 2.0
    else:
        raise NumericError("could not bracket the line minimum")
    lo = 0.0
    if hi > 1.0:
        lo = hi / 2.0
    return sign * brentq(lambda t: sign * slope(sign * t), lo, hi, xtol=1e-15, rtol=1e-14)


def _newton_direction(H: np.ndarray, grad: np.ndarray, reg: float) -> np.ndarray | None:
    if reg > 0:
        H = H + reg * np.mean(np.diag(H)) * np.eye(H.shape[0])
    try:
        # near-flat regions at large p make H ill-conditioned; Armijo vets the step
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            d = scipy.linalg.solve(H, -grad, assume_a="pos", check_finite=False)
    except (np.linalg.LinAlgError, ValueError):
        try:
            d = np.linalg.lstsq(H, -grad, rcond=None)[0]
        except np.linalg.LinAlgError:
            return None
    if not np.all(np.isfinite(d)) or np.dot(d, grad) >= 0:
        return None
    return d


def solve(fam: OrliczFamily, f: GridFunction, grid: Grid | None = None, config: SolverConfig | None = None) -> SolveResult:
    """Minimize the energy; returns the (possibly partial) result.

    Raises
    ------
    DomainError
        If ``p_minus < 2`` (Newton needs a finite ``g'(0)``).
    NumericError
        If the energy is not finite at the initial guess.
    """
    cfg = config or SolverConfig()
    grid = grid or f.grid
    if f.grid is not grid:
        raise ValueError("f lives on a different grid")
    if fam.p_minus < 2.0:
        raise DomainError(f"solver requires p_minus >= 2, got {fam.p_minus}")
    _certified(fam)
    prob = _Problem(fam, f, cfg.backend)
    n = grid.n_interior
    if not np.any(prob.fc):
        zero = grid.zeros()
        return SolveResult(zero, 0.0, 0.0, 0, True, (0.0,))

    if cfg.initial_guess == "dist_oracle_scaled":
        v = dist_oracle(grid).interior_values
        ui = _line_minimum(prob, np.zeros(n), v) * v
    else:
        ui = np.zeros(n)
    E, grad = prob.energy_grad(ui)
    if cfg.initial_guess == "zero":
        d = -grad / prob.c
        ui = ui + _line_minimum(prob, ui, d) * d
        E, grad = prob.energy_grad(ui)
    if not (math.isfinite(E) and np.all(np.isfinite(grad))):
        raise NumericError(f"energy is not finite at the initial guess for {fam}")
    energies = [E]
    gn = prob.grad_norm(grad)
    it = 0
    while gn > cfg.grad_tol and it < cfg.max_iters:
        d = _newton_direction(prob.hessian(ui), grad, cfg.newton_regularization)
        step = _backtrack(prob, ui, E, grad, gn, d, cfg) if d is not None else None
        if step is None:
            step = _backtrack(prob, ui, E, grad, gn, -grad / prob.c, cfg)
        if step is None:
            log.debug("line search stalled at iteration %d (grad_norm %.3e)", it, gn)
            break
        ui, E, grad = step
        gn = prob.grad_norm(grad)
        energies.append(E)
        it += 1
    return SolveResult(grid.from_interior(ui), E, gn, it, gn <= cfg.grad_tol, tuple(energies))


def _backtrack(prob, ui, E, grad, gn, d, cfg):
    slope = float(np.dot(grad, d))
    t = 1.0
    while t > 1e-18:
        trial = ui + t * d
        E2, g2 = prob.energy_grad(trial)
        # overflow (inf or inf - inf) at a long trial step is rejected like an ascent
        if math.isfinite(E2) and np.all(np.isfinite(g2)):
            if E2 <= E + cfg.armijo_c * t * slope:
                return trial, E2, g2
            # at round-off level the energy no longer resolves progress
            if abs(E2 - E) <= 1e-14 * max(abs(E), 1e-300) and prob.grad_norm(g2) < gn:
                return trial, E2, g2
        t *= cfg.backtrack_factor
    return None


def apriori_constant(fam: OrliczFamily, f_norm_r: float, r: float, grid: Grid) -> float:
    """Explicit bound on ``[u]_{s,G}`` for the solution with data ``f``.

    ``max{1, (2 C_emb ||f||_r C_poi d^s / p-)^(1/(p- - 1))}`` where ``C_emb``
    embeds ``L^r`` into the Orlicz space of ``G*`` (growth exponents
    ``(p+)'`` and ``(p-)'``) and ``C_poi`` is the Poincare constant.
    """
    pm, pp = fam.p_minus, fam.p_plus
    dual_minus = pp / (pp - 1.0)
    dual_plus = pm / (pm - 1.0)
    if r < dual_plus:
        raise DomainError(f"r must be >= (p-)' = {dual_plus}, got {r}")
    dom = grid.domain
    c_emb = inclusion_constant(dom.measure, dual_minus, dual_plus, r)
    c_poi = poincare_constant(fam, grid.dimension, grid.s)
    base = 2.0 * c_emb * f_norm_r * c_poi * dom.diameter**grid.s / pm
    return max(1.0, base ** (1.0 / (pm - 1.0)))


@dataclass(frozen=True, eq=False)
class ComparisonResult:
    passed: bool
    worst_node: int
    worst_excess: float
    u1: GridFunction
    u2: GridFunction


def comparison_check(
    fam: OrliczFamily,
    f1: GridFunction,
    f2: GridFunction,
    grid: Grid | None = None,
    config: SolverConfig | None = None,
    strict: bool = False,
) -> ComparisonResult:
    """Solve with ``f1 <= f2`` and test ``u1 <= u2 + 10 grad_tol`` at every node.

    ``worst_excess`` is ``max(u1 - u2)``. With ``strict=True`` a failure
    raises `PropertyViolation` naming the worst node.
    """
    cfg = config or SolverConfig()
    grid = grid or f1.grid
    if np.any(f1.values > f2.values):
        raise DomainError("comparison requires f1 <= f2 pointwise")
    r1 = solve(fam, f1, grid, cfg)
    r2 = solve(fam, f2, grid, cfg)
    diff = r1.u.values - r2.u.values
    node = int(np.argmax(diff))
    excess = float(diff[node])
    ok = excess <= 10.0 * cfg.grad_tol
    if strict and not ok:
        raise PropertyViolation(f"u1 exceeds u2 by {excess:.3e} at node {node}", node, excess)
    return ComparisonResult(ok, node, excess, r1.u, r2.u)
