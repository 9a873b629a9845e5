"""The ``p -> infinity`` limit: Holder infinity Laplacian and experiments.

Family sequences default to the ``G(1) = 1`` normalization; with it the
solutions ``u_p`` for ``f = 1`` stay below ``dist^s`` and approach it
monotonically.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, NumericError
from .grid import Grid, GridFunction, dist_oracle, ridge_mask, unit_ball_measure
from .modulars import lebesgue_norm, modular_Phi_sG, seminorm_sG
from .orlicz import Kind, OrliczFamily, _base_G, eval_g
from .solver import SolverConfig, apriori_constant, solve

__all__ = [
    "FamilySequence",
    "ExperimentRow",
    "ExperimentReport",
    "L_plus",
    "L_minus",
    "quotient_extrema",
    "holder_constant",
    "lambda_plus",
    "lambda_minus",
    "lambda_plus_power",
    "lambda_lower_bound",
    "lambda_convergence_test",
    "run_limit_experiment",
    "region_equation_check",
    "gamma_recovery_check",
    "random_Y",
    "maximization_check",
]


@dataclass(frozen=True)
class FamilySequence:
    """Orlicz families with strictly increasing ``p_minus`` and ``p_plus <= beta p_minus``."""

    families: tuple[OrliczFamily, ...]
    beta: float

    def __post_init__(self):
        fams = tuple(self.families)
        object.__setattr__(self, "families", fams)
        if not fams:
            raise ValueError("family sequence is empty")
        pm = [f.p_minus for f in fams]
        if any(b <= a for a, b in zip(pm, pm[1:])):
            raise ValueError(f"p_minus must be strictly increasing, got {pm}")
        for f in fams:
            if f.p_plus > self.beta * f.p_minus * (1 + 1e-12):
                raise ValueError(f"{f} violates p_plus <= beta p_minus with beta = {self.beta}")

    @classmethod
    def build(
        cls,
        kind: str | Kind,
        exponents: Iterable[float],
        ratio: float = 1.5,
        normalize: bool = True,
        beta: float | None = None,
    ) -> FamilySequence:
        """Sequence of one family kind over ``exponents``.

        For ``sumpowers`` the upper exponent is ``ratio * a``.
        """
        kind = Kind(kind)
        fams = []
        for p in exponents:
            p = float(p)
            if kind is Kind.SUMPOWERS:
                fam = OrliczFamily.sum_of_powers(p, ratio * p)
            else:
                fam = OrliczFamily(kind, p)
            fams.append(fam.normalized() if normalize else fam)
        if beta is None:
            beta = max(f.beta for f in fams)
        return cls(tuple(fams), beta)

    def __iter__(self):
        return iter(self.families)

    def __len__(self):
        return len(self.families)


# ---------------------------------------------------------------------------
# Holder infinity Laplacian


def quotient_extrema(u: GridFunction, backend: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``L^+ u`` and ``L^- u`` at every interior node.

    Sup and inf of ``(u(x) - u(y)) / |x - y|^s`` over all nodes ``y != x``.
    For zero-extended ``u`` the far field (``u = 0``, quotients tending to 0)
    also enters, so ``L^+ >= 0 >= L^-``.
    """
    hi, lo = kernels.quotient_extrema(u.grid, u.values, backend_name=backend)
    if u.is_zero_extended:
        hi, lo = np.maximum(hi, 0.0), np.minimum(lo, 0.0)
    return hi, lo


def _row(u: GridFunction, i: int) -> np.ndarray:
    if not u.grid.interior_mask[i]:
        raise DomainError(f"node {i} is not interior")
    return np.array([i], dtype=np.int64)


def L_plus(u: GridFunction, i: int) -> float:
    hi, _ = kernels.quotient_extrema(u.grid, u.values, rows=_row(u, i))
    return float(max(hi[0], 0.0)) if u.is_zero_extended else float(hi[0])


def L_minus(u: GridFunction, i: int) -> float:
    _, lo = kernels.quotient_extrema(u.grid, u.values, rows=_row(u, i))
    return float(min(lo[0], 0.0)) if u.is_zero_extended else float(lo[0])


def holder_constant(u: GridFunction) -> float:
    """``sup |D^s u|`` over node pairs (zero-extended ``u``)."""
    u.require_zero_extended()
    hi, lo = quotient_extrema(u)
    return float(max(hi.max(initial=0.0), -lo.min(initial=0.0)))


# ---------------------------------------------------------------------------
# lambda operators


def _lambda_data(phi: GridFunction, i: int):
    grid = phi.grid
    if not grid.interior_mask[i]:
        raise DomainError(f"node {i} is not interior")
    r_tab, rs_tab, w_tab = grid.offset_tables
    ad = np.abs(grid.lattice - grid.lattice[i])
    r = r_tab[ad[:, 0], ad[:, 1]]
    far = r > grid.R * (1 + 1e-12)
    if np.any(phi.values[far] != 0.0):
        raise DomainError("phi must vanish at distance > R from the node")
    near = np.flatnonzero(w_tab[ad[:, 0], ad[:, 1]] > 0)
    rs = rs_tab[ad[near, 0], ad[near, 1]]
    D = (phi.values[i] - phi.values[near]) / rs
    keep = D > 0
    kern = (w_tab[ad[near, 0], ad[near, 1]] * grid.cell_measures[near] / rs)[keep]
    return D[keep], kern, float(phi.values[i])


def _far_lambda(fam: OrliczFamily, phi_i: float, lam: float, grid: Grid) -> float:
    """``S int_R^inf g(phi_i / (lam r^s)) r^(-1-s) dr`` (zero far field)."""
    if phi_i <= 0.0:
        return 0.0
    s, R, N = grid.s, grid.R, grid.dimension
    T = phi_i / (lam * R**s)
    return fam.scale * N * unit_ball_measure(N) * float(_base_G(fam.kind, fam.a, fam.b, np.array(T))) / (s * R**s * T)


def lambda_plus(fam: OrliczFamily, phi: GridFunction, i: int, rtol: float = 1e-10) -> float:
    """``inf{lam > 0 : sum_{D^s phi >= 0} g(D^s phi / lam) c_j / r^(N+s) <= 1}``.

    Found by bisection in ``log lam``; the bracket is seeded from the power
    law closed form at ``p = p_minus``.
    """
    D, kern, phi_i = _lambda_data(phi, i)
    grid = phi.grid
    if D.size == 0 and phi_i <= 0.0:
        return 0.0

    def h(lam):
        with np.errstate(over="ignore"):
            return float(np.sum(np.asarray(eval_g(fam, D / lam)) * kern)) + _far_lambda(fam, phi_i, lam, grid)

    seed = lambda_plus_power(OrliczFamily.power(fam.p_minus, fam.scale), phi, i)
    lo = hi = seed if seed > 0 else 1.0
    it = 0
    while h(hi) > 1.0:
        hi *= 2.0
        it += 1
        if it > 2000:
            raise NumericError("lambda bracket expansion failed")
    while h(lo) <= 1.0:
        lo *= 0.5
        it += 1
        if it > 4000:
            raise NumericError("lambda bracket expansion failed")
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if h(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return hi


def lambda_minus(fam: OrliczFamily, phi: GridFunction, i: int, rtol: float = 1e-10) -> float:
    return -lambda_plus(fam, -phi, i, rtol)


def lambda_plus_power(fam: OrliczFamily, phi: GridFunction, i: int) -> float:
    """Closed form of `lambda_plus` for ``G = scale * t^p / p``."""
    if fam.kind is not Kind.POWER:
        raise ValueError("closed form only for the power family")
    D, kern, phi_i = _lambda_data(phi, i)
    grid = phi.grid
    p, s, R, N = fam.a, grid.s, grid.R, grid.dimension
    total = float(np.sum(D ** (p - 1.0) * kern))
    if phi_i > 0:
        total += N * unit_ball_measure(N) * (phi_i / R**s) ** (p - 1.0) / (p * s * R**s)
    if total == 0.0:
        return 0.0
    return (fam.scale * total) ** (1.0 / (p - 1.0))


def lambda_lower_bound(fam: OrliczFamily, phi: GridFunction, i: int, t: float) -> float:
    """``t (C p_minus)^(1/(p_plus - 1))`` with ``C = sum_{D^s phi > t} c_j / r^(N+s)``."""
    D, kern, _ = _lambda_data(phi, i)
    C = float(np.sum(kern[D > t]))
    return t * (C * fam.p_minus) ** (1.0 / (fam.p_plus - 1.0))


class LambdaConvergence(NamedTuple):
    exponents: list[float]
    values: list[float]
    closed_form: list[float | None]
    target: float

    @property
    def gaps(self) -> list[float]:
        return [abs(v - self.target) for v in self.values]


def lambda_convergence_test(seq: FamilySequence, phi: GridFunction, i: int) -> LambdaConvergence:
    """``lambda^+_{g_n} phi(x_i)`` along the sequence and its target ``L^+ phi(x_i)``."""
    target = L_plus(phi, i) if phi.is_zero_extended else float(
        kernels.quotient_extrema(phi.grid, phi.values, rows=_row(phi, i))[0][0]
    )
    vals, closed = [], []
    for fam in seq:
        vals.append(lambda_plus(fam, phi, i))
        closed.append(lambda_plus_power(fam, phi, i) if fam.kind is Kind.POWER else None)
    return LambdaConvergence([f.p_minus for f in seq], vals, closed, target)


# ---------------------------------------------------------------------------
# experiment pipeline


@dataclass(frozen=True)
class ExperimentRow:
    family: str
    p_minus: float
    p_plus: float
    sup_error: float
    holder_constant: float
    seminorm_sG: float
    apriori_bound: float
    energy: float
    iterations: int
    grad_norm: float
    converged: bool


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    rows: tuple[ExperimentRow, ...]
    holder_s_constant_of_limit: float
    L_plus_max: float
    L_minus_min: float
    maximization_gap: float
    oracle_applicable: bool
    solutions: tuple[GridFunction, ...] = field(default=(), repr=False)

    @property
    def sup_errors(self) -> list[float]:
        return [r.sup_error for r in self.rows]

    def to_dict(self) -> dict:
        return {
            "rows": [asdict(r) for r in self.rows],
            "limit": {
                "holder_s_constant_of_limit": self.holder_s_constant_of_limit,
                "L_plus_max": self.L_plus_max,
                "L_minus_min": self.L_minus_min,
                "maximization_gap": self.maximization_gap,
                "oracle_applicable": self.oracle_applicable,
            },
        }


def run_limit_experiment(
    seq: FamilySequence,
    f: GridFunction,
    grid: Grid | None = None,
    config: SolverConfig | None = None,
    r: float = 2.0,
) -> ExperimentReport:
    """Solve for every family and compare with ``dist^s``.

    Rows record the sup error against the oracle, the discrete Holder
    constant, ``[u_n]_{s,G_n}``, the a-priori bound (data norm in ``L^r``),
    the energy and solver statistics. Limit diagnostics are evaluated on the
    last solution, with ridge nodes excluded from the ``L^+`` / ``L^-`` scans.
    """
    grid = grid or f.grid
    cfg = config or SolverConfig()
    oracle = dist_oracle(grid)
    f_norm = lebesgue_norm(f, r)
    rows, sols = [], []
    for fam in seq:
        res = solve(fam, f, grid, cfg)
        u = res.u
        rows.append(
            ExperimentRow(
                family=fam.spec(),
                p_minus=fam.p_minus,
                p_plus=fam.p_plus,
                sup_error=float(np.max(np.abs(u.values - oracle.values))),
                holder_constant=holder_constant(u),
                seminorm_sG=seminorm_sG(fam, u),
                apriori_bound=apriori_constant(fam, f_norm, r, grid),
                energy=res.energy,
                iterations=res.iterations,
                grad_norm=res.grad_norm,
                converged=res.converged,
            )
        )
        sols.append(u)
    last = sols[-1]
    hi, lo = quotient_extrema(last)
    keep = ~ridge_mask(grid)[grid.interior]
    gap = oracle.values - last.values
    return ExperimentReport(
        rows=tuple(rows),
        holder_s_constant_of_limit=holder_constant(last),
        L_plus_max=float(hi[keep].max(initial=0.0)),
        L_minus_min=float(lo[keep].min(initial=0.0)),
        maximization_gap=float(np.sum((f.values * gap * grid.cell_measures)[grid.interior])),
        oracle_applicable=bool(np.all(f.interior_values > 0)),
        solutions=tuple(sols),
    )


class RegionResult(NamedTuple):
    region: str
    nodes: int
    worst: float
    passed: bool


def _neighbors(grid: Grid, mask: np.ndarray) -> np.ndarray:
    """Nodes with a lattice neighbor (unit offset along an axis) in ``mask``."""
    index = {tuple(k): n for n, k in enumerate(grid.lattice.tolist())}
    out = np.zeros(grid.n_nodes, dtype=bool)
    steps = [(1, 0), (-1, 0)] + ([(0, 1), (0, -1)] if grid.dimension == 2 else [])
    for n in np.flatnonzero(mask):
        k = grid.lattice[n]
        for d in steps:
            m = index.get((k[0] + d[0], k[1] + d[1]))
            if m is not None:
                out[m] = True
    return out


def region_equation_check(
    u_limit: GridFunction, f: GridFunction, tol: float = 0.1, exclude_ridge: bool = True
) -> list[RegionResult]:
    """Check the limit equations region by region.

    * ``f > 0``: ``L^+ u = 1``;  ``f < 0``: ``L^- u = -1``;
    * ``f = 0`` away from the support of ``f``: ``L^+ u + L^- u = 0``;
    * ``f = 0`` next to ``{f > 0}`` only: ``L_s u >= 0``; next to ``{f < 0}`` only: ``L_s u <= 0``.

    All comparisons carry the tolerance ``tol``; empty regions pass.
    """
    grid = u_limit.grid
    hi, lo = quotient_extrema(u_limit)
    Ls = hi + lo
    fv = f.values
    inside = grid.interior_mask
    pos, neg = inside & (fv > 0), inside & (fv < 0)
    zero = inside & (fv == 0)
    near_pos, near_neg = _neighbors(grid, pos), _neighbors(grid, neg)
    keep = np.ones(grid.n_nodes, dtype=bool)
    if exclude_ridge:
        keep &= ~ridge_mask(grid)
    regions = {
        "f>0": (pos, np.abs(hi - 1.0)),
        "f<0": (neg, np.abs(lo + 1.0)),
        "f=0 interior": (zero & ~near_pos & ~near_neg, np.abs(Ls)),
        "boundary of f>0": (zero & near_pos & ~near_neg, -Ls),
        "boundary of f<0": (zero & near_neg & ~near_pos, Ls),
    }
    out = []
    for name, (mask, resid) in regions.items():
        sel = (mask & keep)[grid.interior]
        vals = resid[sel]
        worst = float(vals.max()) if vals.size else 0.0
        out.append(RegionResult(name, int(vals.size), worst, worst <= tol))
    return out


class GammaRecovery(NamedTuple):
    exponents: list[float]
    eps: list[float]
    energies: list[float]
    holder_constant: float


def gamma_recovery_check(seq: FamilySequence, u: GridFunction, slack: float = 1e-9) -> GammaRecovery:
    """``Phi_{s,G_n}((1 - eps_n) u)`` with ``eps_n = log(p_n) / p_n``, ``p_n = p_minus``.

    ``u`` must lie in the discrete constraint set: zero outside the domain
    and Holder-``s`` constant at most ``1 + slack``.
    """
    u.require_zero_extended()
    hc = holder_constant(u)
    if hc > 1.0 + slack:
        raise DomainError(f"u has Holder constant {hc:.6g} > 1 and is not admissible")
    eps, energies = [], []
    for fam in seq:
        e = math.log(fam.p_minus) / fam.p_minus
        eps.append(e)
        energies.append(modular_Phi_sG(fam, (1.0 - e) * u))
    return GammaRecovery([f.p_minus for f in seq], eps, energies, hc)


def random_Y(grid: Grid, trials: int, seed: int = 0) -> list[GridFunction]:
    """Random members of the discrete constraint set (Holder constant <= 1).

    Values are drawn uniformly in ``[-d^s, d^s]``, clipped to
    ``[-dist^s, dist^s]`` and then replaced by the inf-convolution
    ``min_y (psi(y) + |x - y|^s)`` over all nodes, which is exactly
    1-Holder for the metric ``|x - y|^s`` and keeps the exterior at 0.
    """
    rng = np.random.default_rng(seed)
    idx = grid.interior
    bound = dist_oracle(grid).values[idx]
    amp = grid.domain.diameter**grid.s
    _, rs_tab, _ = grid.offset_tables
    ad = np.abs(grid.lattice[idx][:, None, :] - grid.lattice[None, :, :])
    dist_s = rs_tab[ad[..., 0], ad[..., 1]]
    dist_s[np.arange(idx.size), idx] = 0.0
    out = []
    for _ in range(trials):
        psi = np.zeros(grid.n_nodes)
        psi[idx] = np.clip(rng.uniform(-amp, amp, idx.size), -bound, bound)
        env = np.min(psi[None, :] + dist_s, axis=1)
        out.append(grid.from_interior(env))
    return out


class MaximizationResult(NamedTuple):
    gap: float
    passed: bool
    worst_index: int
    candidate_value: float


def maximization_check(
    f: GridFunction,
    u_candidate: GridFunction,
    trials: int = 100,
    seed: int = 0,
    extra: Sequence[GridFunction] = (),
    slack: float = 1e-12,
) -> MaximizationResult:
    """Test ``sum f psi c <= sum f u c`` over random ``psi`` in the constraint set.

    ``gap`` is the largest excess ``sum f (psi - u) c`` (``-inf`` without
    competitors); ``extra`` adds fixed competitors after the random ones.
    """
    hc = holder_constant(u_candidate)
    if hc > 1.0 + 1e-9:
        raise DomainError(f"candidate has Holder constant {hc:.6g} > 1")
    grid = f.grid
    w = (f.values * grid.cell_measures)[grid.interior]
    base = float(np.dot(w, u_candidate.interior_values))
    comps = random_Y(grid, trials, seed) + list(extra)
    if not comps:
        return MaximizationResult(-math.inf, True, -1, base)
    gaps = np.array([float(np.dot(w, psi.interior_values)) - base for psi in comps])
    k = int(np.argmax(gaps))
    return MaximizationResult(float(gaps[k]), bool(gaps[k] <= slack), k, base)
