"""Orlicz functions ``G``, their derivatives and complementary functions.

Three parametric families are supported::

    power:p        G(t) = |t|^p / p
    sumpowers:a,b  G(t) = |t|^a + |t|^b
    powerlog:p     G(t) = |t|^p log(1 + |t|)

Every family carries a positive ``scale`` factor (``G -> scale * G``); the
growth exponents are invariant under it. ``OrliczFamily.normalized`` picks
the scale giving ``G(1) = 1``.

All evaluation functions accept scalars or arrays and return the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import CertificationError, DomainError, NumericError, SingularityError

__all__ = [
    "Kind",
    "OrliczFamily",
    "GrowthCertificate",
    "parse_family",
    "eval_G",
    "eval_g",
    "eval_g_prime",
    "eval_G_star",
    "eval_g_star",
    "certify_growth",
    "default_samples",
]


class Kind(str, Enum):
    POWER = "power"
    SUMPOWERS = "sumpowers"
    POWERLOG = "powerlog"


_KIND_CODE = {Kind.POWER: 0, Kind.SUMPOWERS: 1, Kind.POWERLOG: 2}


@dataclass(frozen=True)
class OrliczFamily:
    """A parametric Orlicz function.

    Parameters
    ----------
    kind : Kind
        Family selector.
    a : float
        Exponent ``p`` for ``power``/``powerlog``; lower exponent for ``sumpowers``.
    b : float, optional
        Upper exponent of ``sumpowers`` (``b >= a``).
    scale : float
        Positive multiplier applied to ``G`` (and hence to ``g``, ``g'``).
    """

    kind: Kind
    a: float
    b: float | None = None
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not (math.isfinite(self.a) and self.a > 1.0):
            raise ValueError(f"exponent must be > 1, got {self.a}")
        if self.kind is Kind.SUMPOWERS:
            if self.b is None or not math.isfinite(self.b) or self.b < self.a:
                raise ValueError(f"sumpowers needs b >= a, got a={self.a}, b={self.b}")
        elif self.b is not None:
            raise ValueError(f"{self.kind.value} takes a single exponent")
        if not (math.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError(f"scale must be positive, got {self.scale}")

    @classmethod
    def power(cls, p: float, scale: float = 1.0) -> OrliczFamily:
        return cls(Kind.POWER, float(p), None, scale)

    @classmethod
    def sum_of_powers(cls, a: float, b: float, scale: float = 1.0) -> OrliczFamily:
        return cls(Kind.SUMPOWERS, float(a), float(b), scale)

    @classmethod
    def power_log(cls, p: float, scale: float = 1.0) -> OrliczFamily:
        return cls(Kind.POWERLOG, float(p), None, scale)

    @property
    def p_minus(self) -> float:
        return self.a

    @property
    def p_plus(self) -> float:
        if self.kind is Kind.SUMPOWERS:
            return self.b
        if self.kind is Kind.POWERLOG:
            return self.a + 1.0
        return self.a

    @property
    def beta(self) -> float:
        return self.p_plus / self.p_minus

    @property
    def code(self) -> tuple[int, float, float, float]:
        """``(kind code, a, b, scale)`` as consumed by the compiled kernels."""
        return _KIND_CODE[self.kind], float(self.a), float(self.b or 0.0), float(self.scale)

    @property
    def base_G1(self) -> float:
        """``G(1)`` of the unscaled family."""
        return float(_base_G(self.kind, self.a, self.b, np.array(1.0)))

    def normalized(self) -> OrliczFamily:
        """The same family rescaled so that ``G(1) = 1``."""
        return replace(self, scale=1.0 / self.base_G1)

    @property
    def is_normalized(self) -> bool:
        return math.isclose(self.scale * self.base_G1, 1.0, rel_tol=1e-12)

    def spec(self) -> str:
        if self.kind is Kind.SUMPOWERS:
            body = f"a={self.a:g},b={self.b:g}"
        else:
            body = f"p={self.a:g}"
        if self.is_normalized and self.scale != 1.0:
            body += ",norm=unit"
        elif self.scale != 1.0:
            body += f",scale={self.scale!r}"
        return f"{self.kind.value}:{body}"

    def __str__(self) -> str:
        return self.spec()


def parse_family(spec: str) -> OrliczFamily:
    """Parse ``"power:p=8"``, ``"sumpowers:a=4,b=6"``, ``"powerlog:p=5"``.

    An optional ``norm=unit`` (``G(1) = 1``) or ``scale=<x>`` may follow.
    """
    if not isinstance(spec, str) or ":" not in spec:
        raise ValueError(f"malformed family spec {spec!r}")
    head, _, body = spec.partition(":")
    try:
        kind = Kind(head.strip().lower())
    except ValueError:
        raise ValueError(f"unknown family kind {head!r}") from None
    params: dict[str, str] = {}
    for item in filter(None, (x.strip() for x in body.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"malformed parameter {item!r} in {spec!r}")
        params[key.strip().lower()] = value.strip()
    norm = params.pop("norm", "none").lower()
    scale = float(params.pop("scale", 1.0))
    try:
        if kind is Kind.SUMPOWERS:
            fam = OrliczFamily.sum_of_powers(float(params.pop("a")), float(params.pop("b")), scale)
        else:
            fam = OrliczFamily(kind, float(params.pop("p")), None, scale)
    except KeyError as exc:
        raise ValueError(f"missing parameter {exc.args[0]!r} in {spec!r}") from None
    if params:
        raise ValueError(f"unknown parameters {sorted(params)} in {spec!r}")
    if norm == "unit":
        fam = fam.normalized()
    elif norm != "none":
        raise ValueError(f"unknown normalization {norm!r}")
    return fam


# ---------------------------------------------------------------------------
# unscaled family formulas, t >= 0


def _base_G(kind, a, b, t):
    if kind is Kind.POWER:
        return t**a / a
    if kind is Kind.SUMPOWERS:
        return t**a + t**b
    return t**a * np.log1p(t)


def _base_g(kind, a, b, t):
    if kind is Kind.POWER:
        return t ** (a - 1.0)
    if kind is Kind.SUMPOWERS:
        return a * t ** (a - 1.0) + b * t ** (b - 1.0)
    return a * t ** (a - 1.0) * np.log1p(t) + t**a / (1.0 + t)


def _base_gp(kind, a, b, t):
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind is Kind.POWER:
            return (a - 1.0) * t ** (a - 2.0)
        if kind is Kind.SUMPOWERS:
            return a * (a - 1.0) * t ** (a - 2.0) + b * (b - 1.0) * t ** (b - 2.0)
        out = (
            a * (a - 1.0) * t ** (a - 2.0) * np.log1p(t)
            + 2.0 * a * t ** (a - 1.0) / (1.0 + t)
            - t**a / (1.0 + t) ** 2
        )
        return np.where(t == 0.0, 0.0, out)


# log-space versions, argument L = log t (t > 0)


def _log1p_exp(L):
    return np.logaddexp(0.0, L)


def _base_log_G(kind, a, b, L):
    if kind is Kind.POWER:
        return a * L - math.log(a)
    if kind is Kind.SUMPOWERS:
        return np.logaddexp(a * L, b * L)
    return a * L + np.log(_log1p_exp(L))


def _base_log_g(kind, a, b, L):
    if kind is Kind.POWER:
        return (a - 1.0) * L
    if kind is Kind.SUMPOWERS:
        return np.logaddexp(math.log(a) + (a - 1.0) * L, math.log(b) + (b - 1.0) * L)
    l1p = _log1p_exp(L)
    return np.logaddexp(math.log(a) + (a - 1.0) * L + np.log(l1p), a * L - l1p)


def _base_log_gp(kind, a, b, L):
    if kind is Kind.POWER:
        return math.log(a - 1.0) + (a - 2.0) * L
    if kind is Kind.SUMPOWERS:
        return np.logaddexp(
            math.log(a * (a - 1.0)) + (a - 2.0) * L, math.log(b * (b - 1.0)) + (b - 2.0) * L
        )
    l1p = _log1p_exp(L)
    pos = np.logaddexp(
        math.log(a * (a - 1.0)) + (a - 2.0) * L + np.log(l1p),
        math.log(2.0 * a) + (a - 1.0) * L - l1p,
    )
    neg = a * L - 2.0 * l1p
    return pos + np.log1p(-np.exp(neg - pos))


def _log_G(fam, L):
    return math.log(fam.scale) + _base_log_G(fam.kind, fam.a, fam.b, L)


def _log_g(fam, L):
    return math.log(fam.scale) + _base_log_g(fam.kind, fam.a, fam.b, L)


def _log_gp(fam, L):
    return math.log(fam.scale) + _base_log_gp(fam.kind, fam.a, fam.b, L)


# ---------------------------------------------------------------------------
# public evaluation


def _as_finite(t, what="t"):
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{what} must be finite")
    return arr


def _ret(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def eval_G(fam: OrliczFamily, t):
    """``G(|t|)``."""
    x = _as_finite(t)
    return _ret(fam.scale * _base_G(fam.kind, fam.a, fam.b, np.abs(x)), t)


def eval_g(fam: OrliczFamily, t):
    """``g = G'``, extended as an odd function."""
    x = _as_finite(t)
    return _ret(np.sign(x) * fam.scale * _base_g(fam.kind, fam.a, fam.b, np.abs(x)), t)


def eval_g_prime(fam: OrliczFamily, t):
    """``g'(t)`` (even). Raises `SingularityError` where ``g'`` blows up at 0."""
    x = np.abs(_as_finite(t))
    if np.any(x == 0.0) and fam.kind is not Kind.POWERLOG and fam.a < 2.0:
        raise SingularityError(f"g' of {fam} is singular at t = 0")
    return _ret(fam.scale * _base_gp(fam.kind, fam.a, fam.b, x), t)


def _g_inverse(fam: OrliczFamily, y: np.ndarray) -> np.ndarray:
    """Solve ``g(t) = y`` for ``y > 0`` by bisection on ``log t``."""
    if fam.kind is Kind.POWER:
        return (y / fam.scale) ** (1.0 / (fam.a - 1.0))
    target = np.log(y)
    lo = np.full(y.shape, -1.0)
    hi = np.full(y.shape, 1.0)
    for _ in range(200):
        low_bad = _log_g(fam, lo) > target
        high_bad = _log_g(fam, hi) < target
        if not (low_bad.any() or high_bad.any()):
            break
        lo = np.where(low_bad, 2.0 * lo - 1.0, lo)
        hi = np.where(high_bad, 2.0 * hi + 1.0, hi)
    else:
        raise NumericError(f"could not bracket g(t) = y for {fam}")
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        below = _log_g(fam, mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(1.0, np.abs(mid))):
            break
    return np.exp(0.5 * (lo + hi))


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(obj, lo: np.ndarray, hi: np.ndarray, iters: int = 90):
    """Vectorized golden-section maximization of a concave ``obj`` on ``[lo, hi]``."""
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = obj(x1), obj(x2)
    for _ in range(iters):
        left = f1 >= f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        new_x2 = np.where(left, x1, lo + _GOLDEN * (hi - lo))
        new_x1 = np.where(left, hi - _GOLDEN * (hi - lo), x2)
        new_f2 = np.where(left, f1, np.nan)
        new_f1 = np.where(left, np.nan, f2)
        x1, x2 = new_x1, new_x2
        f1 = np.where(left, obj(x1), new_f1)
        f2 = np.where(left, new_f2, obj(x2))
    return np.maximum(f1, f2)


def eval_G_star(fam: OrliczFamily, a):
    """Complementary function ``G*(a) = sup_{t>0} (a t - G(t))``.

    Closed form for ``power``; otherwise golden-section maximization on
    ``[0, t_max]`` where ``g(t_max) = 2a`` (found by bisection) brackets the
    maximizer. Evaluated at ``|a|`` (``G*`` is even).
    """
    x = np.abs(_as_finite(a, "a"))
    out = np.zeros_like(x, dtype=float)
    pos = x > 0.0
    if np.any(pos):
        y = x[pos]
        if fam.kind is Kind.POWER:
            ts = _g_inverse(fam, y)
            out[pos] = y * ts * (1.0 - 1.0 / fam.a)
        else:
            t_max = _g_inverse(fam, 2.0 * y)
            scale = fam.scale

            def obj(tau):
                t = tau * t_max
                return y * t - scale * _base_G(fam.kind, fam.a, fam.b, t)

            out[pos] = _golden_max(obj, np.zeros_like(y), np.ones_like(y))
    return _ret(out, a)


def eval_g_star(fam: OrliczFamily, a):
    """Derivative of ``G*``, i.e. the inverse function of ``g`` (odd)."""
    x = _as_finite(a, "a")
    mag = np.abs(x)
    out = np.zeros_like(mag, dtype=float)
    pos = mag > 0.0
    if np.any(pos):
        out[pos] = _g_inverse(fam, mag[pos])
    return _ret(np.sign(x) * out, a)


# ---------------------------------------------------------------------------
# growth certification


class GrowthCertificate(NamedTuple):
    """Exponents plus the worst log-slack of every checked inequality.

    ``conjugate_samples`` counts the samples on which the ``G*`` based
    inequalities were checked (those where ``G`` and ``g`` are representable).
    """

    p_minus: float
    p_plus: float
    beta: float
    report: dict
    conjugate_samples: int


_LOG_HUGE = 650.0


def default_samples(n: int = 10_000) -> np.ndarray:
    return np.logspace(-6.0, 6.0, n)


def _conj(p: float) -> float:
    return p / (p - 1.0)


def certify_growth(fam: OrliczFamily, samples=None, rtol: float = 1e-9) -> GrowthCertificate:
    """Check the growth inequalities of ``fam`` on log-uniform samples.

    Every inequality ``lhs <= rhs`` is compared as ``log rhs - log lhs``; the
    report maps each inequality name to its worst log-slack (negative means
    violated). A slack below ``-rtol`` raises `CertificationError` naming the
    inequality. Inequalities needing ``G(1) = 1`` are checked on
    ``G / G(1)``.
    """
    t = default_samples() if samples is None else np.sort(np.asarray(samples, dtype=float))
    if t.size == 0 or np.any(t <= 0) or t[0] > 1e-6 * (1 + 1e-12) or t[-1] < 1e6 * (1 - 1e-12):
        raise ValueError("samples must be positive and span at least [1e-6, 1e6]")
    pm, pp, beta = fam.p_minus, fam.p_plus, fam.beta
    L = np.log(t)
    logG = _log_G(fam, L)
    logg = _log_g(fam, L)
    loggp = _log_gp(fam, L)
    logG1 = float(_log_G(fam, np.array(0.0)))
    logGn, loggn = logG - logG1, logg - logG1  # normalized G(1) = 1
    big, small = L > 0, L < 0

    # pair grids: 100 x 100 subsample
    sub = L[np.linspace(0, L.size - 1, 100).astype(int)]
    sub_lt1 = np.log(np.logspace(-6.0, -1e-9, 100))
    A, T = np.meshgrid(sub, sub, indexing="ij")
    A1, T1 = np.meshgrid(sub, sub_lt1, indexing="ij")

    report: dict[str, float] = {}

    def record(name, slack, tol=rtol):
        worst = float(np.min(slack))
        report[name] = worst
        if worst < -tol:
            raise CertificationError(name, worst)

    record("monotone:G_increasing", np.diff(logG))
    record("monotone:g_positive_increasing", np.diff(logg))
    ratio = L + logg - logG
    record("index:lower", ratio - math.log(pm))
    record("index:upper", math.log(pp) - ratio)
    record("G_growth_above_1:lower", logGn[big] - pm * L[big])
    record("G_growth_above_1:upper", pp * L[big] - logGn[big])
    record("G_growth_below_1:lower", logGn[small] - pp * L[small])
    record("G_growth_below_1:upper", pm * L[small] - logGn[small])
    record("g_growth_above_1:lower", loggn[big] - math.log(pm) - (pm - 1) * L[big])
    record("g_growth_above_1:upper", math.log(pp) + (pp - 1) * L[big] - loggn[big])
    record("g_growth_below_1:lower", loggn[small] - math.log(pm) - (pp - 1) * L[small])
    record("g_growth_below_1:upper", math.log(pp) + (pm - 1) * L[small] - loggn[small])

    jump = _log_G(fam, A + T) - _log_G(fam, A)
    record("increment:lower", jump - np.minimum(pm * T, pp * T))
    record("increment:upper", np.maximum(pm * T, pp * T) - jump)

    lg_at = _log_g(fam, A1 + T1)
    lg_a = _log_g(fam, A1)
    lb = math.log(beta)
    record("g_shift:lower", lg_at - (-lb + lg_a + (pp - 1) * T1))
    record("g_shift:upper", lb + lg_a + (pm - 1) * T1 - lg_at)

    # Young, identity and duality ratio use G* = sup(at - G(t)) computed in
    # linear arithmetic; restrict to samples where G, g and a t stay representable
    ok = (np.abs(logG) < _LOG_HUGE) & (np.abs(logg) < _LOG_HUGE) & (logg + L < _LOG_HUGE)
    Lc, logGc, loggc, ratio_c = L[ok], logG[ok], logg[ok], ratio[ok]
    a_vals = np.exp(loggc)
    Gs = eval_G_star(fam, a_vals)
    if np.any(~np.isfinite(Gs)) or np.any(Gs <= 0):
        raise NumericError(f"G* evaluation failed for {fam}")
    logGs = np.log(Gs)
    sub_idx = np.linspace(0, Lc.size - 1, 100).astype(int)
    Ya, Yt = np.meshgrid(sub_idx, sub_idx, indexing="ij")
    young_lhs = loggc[Ya] + Lc[Yt]
    young_rhs = np.logaddexp(logGc[Yt], logGs[Ya])
    record("young", young_rhs - young_lhs)
    identity_rhs = logGc + np.log(np.expm1(ratio_c))  # log(t g - G)
    record("young_equality", -np.abs(logGs - identity_rhs), tol=1e-8)
    gs = eval_g_star(fam, a_vals)
    dual = np.log(a_vals) + np.log(gs) - logGs
    record("conjugate_index:lower", dual - math.log(_conj(pp)))
    record("conjugate_index:upper", math.log(_conj(pm)) - dual)

    record("g_prime_index", math.log(pp - 1.0) - (L + loggp - logg))
    lgp_ct = _log_gp(fam, A1 + T1)
    rhs12 = math.log((pp - 1.0) * beta) + lg_a - A1 + (pm - 2.0) * T1
    record("g_prime_scaling", rhs12 - lgp_ct)
    record("delta2", pp * math.log(2.0) - (_log_G(fam, L + math.log(2.0)) - logG))
    return GrowthCertificate(pm, pp, beta, report, int(ok.sum()))
