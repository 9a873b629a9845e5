"""Pairwise sums over the truncated pair set.

Each kernel loops over a set of *rows* (interior nodes ``i``) against every
lattice node ``j != i``; pair geometry comes from the offset tables of the
grid, so ``r**s`` and ``r**-N`` are never recomputed. Family functions are
evaluated unscaled (the caller multiplies by ``fam.scale``).

Two backends implement the same arithmetic: numba (rows in parallel, each
row summed sequentially, hence deterministic) and a row-blocked numpy
fallback. `backend()` reports the active one.
"""

from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import maybe_njit, prange

__all__ = [
    "backend",
    "energy_grad_rows",
    "hessian_rows",
    "pairing_rows",
    "quotient_extrema",
]


def backend(name: str | None = None) -> str:
    """Resolve ``name`` (``"numba"``, ``"numpy"`` or None for the default)."""
    if name is None:
        return "numba" if _accel.USE_NUMBA else "numpy"
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not _accel.HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    return name


# ---------------------------------------------------------------------------
# scalar family formulas (t >= 0), kind codes: 0 power, 1 sumpowers, 2 powerlog


@maybe_njit()
def _G(kind, a, b, t):
    if kind == 0:
        return t**a / a
    if kind == 1:
        return t**a + t**b
    return t**a * math.log1p(t)


@maybe_njit()
def _g(kind, a, b, t):
    if kind == 0:
        return t ** (a - 1.0)
    if kind == 1:
        return a * t ** (a - 1.0) + b * t ** (b - 1.0)
    return a * t ** (a - 1.0) * math.log1p(t) + t**a / (1.0 + t)


@maybe_njit()
def _gp(kind, a, b, t):
    if kind == 0:
        return (a - 1.0) * t ** (a - 2.0)
    if kind == 1:
        return a * (a - 1.0) * t ** (a - 2.0) + b * (b - 1.0) * t ** (b - 2.0)
    if t == 0.0:
        return 0.0
    return (
        a * (a - 1.0) * t ** (a - 2.0) * math.log1p(t)
        + 2.0 * a * t ** (a - 1.0) / (1.0 + t)
        - t**a / (1.0 + t) ** 2
    )


@maybe_njit()
def _Gg(kind, a, b, t):
    """``(G(t), g(t))`` sharing the power evaluations."""
    if kind == 0:
        ta = t ** (a - 1.0)
        return t * ta / a, ta
    if kind == 1:
        ta = t ** (a - 1.0)
        tb = t ** (b - 1.0)
        return t * (ta + tb), a * ta + b * tb
    ta = t ** (a - 1.0)
    lg = math.log1p(t)
    return t * ta * lg, a * ta * lg + t * ta / (1.0 + t)


# ---------------------------------------------------------------------------
# numba kernels


@maybe_njit(parallel=True)
def _energy_grad_nb(lat, rows, pos, u, c, rs_tab, w_tab, kind, a, b):
    n = rows.size
    M = lat.shape[0]
    en = np.zeros(n)
    op = np.zeros(n)
    for ia in prange(n):
        i = rows[ia]
        ui = u[i]
        k0 = lat[i, 0]
        k1 = lat[i, 1]
        e = 0.0
        o = 0.0
        for j in range(M):
            w = w_tab[abs(lat[j, 0] - k0), abs(lat[j, 1] - k1)]
            if w == 0.0 or j == i:
                continue
            rs = rs_tab[abs(lat[j, 0] - k0), abs(lat[j, 1] - k1)]
            D = (ui - u[j]) / rs
            ad = abs(D)
            wc = w * c[j]
            mult = 1.0 if pos[j] >= 0 else 2.0
            Gv, gv = _Gg(kind, a, b, ad)
            e += mult * Gv * wc
            o += (gv if D >= 0.0 else -gv) * wc / rs
        en[ia] = e * c[i]
        op[ia] = 2.0 * o
    return en, op


@maybe_njit(parallel=True)
def _hessian_nb(lat, rows, pos, u, c, rs_tab, w_tab, kind, a, b):
    n = rows.size
    M = lat.shape[0]
    H = np.zeros((n, n))
    for ia in prange(n):
        i = rows[ia]
        ui = u[i]
        k0 = lat[i, 0]
        k1 = lat[i, 1]
        diag = 0.0
        for j in range(M):
            w = w_tab[abs(lat[j, 0] - k0), abs(lat[j, 1] - k1)]
            if w == 0.0 or j == i:
                continue
            rs = rs_tab[abs(lat[j, 0] - k0), abs(lat[j, 1] - k1)]
            val = 2.0 * _gp(kind, a, b, abs((ui - u[j]) / rs)) * w * c[j] * c[i] / (rs * rs)
            diag += val
            jb = pos[j]
            if jb >= 0:
                H[ia, jb] -= val
        H[ia, ia] += diag
    return H


@maybe_njit(parallel=True)
def _pairing_nb(lat, rows, pos, u, v, c, rs_tab, w_tab, kind, a, b):
    n = rows.size
    M = lat.shape[0]
    out = np.zeros(n)
    for ia in prange(n):
        i = rows[ia]
        k0 = lat[i, 0]
        k1 = lat[i, 1]
        acc = 0.0
        for j in range(M):
            w = w_tab[abs(lat[j, 0] - k0), abs(lat[j, 1] - k1)]
            if w == 0.0 or j == i:
                continue
            rs = rs_tab[abs(lat[j, 0] - k0), abs(lat[j, 1] - k1)]
            D = (u[i] - u[j]) / rs
            gv = _g(kind, a, b, abs(D))
            mult = 1.0 if pos[j] >= 0 else 2.0
            acc += mult * (gv if D >= 0.0 else -gv) * (v[i] - v[j]) / rs * w * c[j]
        out[ia] = acc * c[i]
    return out


@maybe_njit(parallel=True)
def _extrema_nb(lat, rows, u, rs_tab):
    n = rows.size
    M = lat.shape[0]
    hi = np.empty(n)
    lo = np.empty(n)
    for ia in prange(n):
        i = rows[ia]
        k0 = lat[i, 0]
        k1 = lat[i, 1]
        mx = -np.inf
        mn = np.inf
        for j in range(M):
            if j == i:
                continue
            q = (u[i] - u[j]) / rs_tab[abs(lat[j, 0] - k0), abs(lat[j, 1] - k1)]
            if q > mx:
                mx = q
            if q < mn:
                mn = q
        hi[ia] = mx
        lo[ia] = mn
    return hi, lo


# ---------------------------------------------------------------------------
# numpy fallback (row blocks)

_BLOCK_ELEMS = 1 << 20


def _blocks(n, M):
    step = max(1, _BLOCK_ELEMS // max(M, 1))
    for start in range(0, n, step):
        yield slice(start, min(n, start + step))


def _geometry(lat, rows_blk, rs_tab, w_tab):
    d0 = np.abs(lat[None, :, 0] - lat[rows_blk, 0][:, None])
    d1 = np.abs(lat[None, :, 1] - lat[rows_blk, 1][:, None])
    return rs_tab[d0, d1], w_tab[d0, d1]


def _np_G(kind, a, b, t):
    if kind == 0:
        return t**a / a
    if kind == 1:
        return t**a + t**b
    return t**a * np.log1p(t)


def _np_g(kind, a, b, t):
    if kind == 0:
        return t ** (a - 1.0)
    if kind == 1:
        return a * t ** (a - 1.0) + b * t ** (b - 1.0)
    return a * t ** (a - 1.0) * np.log1p(t) + t**a / (1.0 + t)


def _np_gp(kind, a, b, t):
    if kind == 0:
        return (a - 1.0) * t ** (a - 2.0)
    if kind == 1:
        return a * (a - 1.0) * t ** (a - 2.0) + b * (b - 1.0) * t ** (b - 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (
            a * (a - 1.0) * t ** (a - 2.0) * np.log1p(t)
            + 2.0 * a * t ** (a - 1.0) / (1.0 + t)
            - t**a / (1.0 + t) ** 2
        )
    return np.where(t == 0.0, 0.0, val)


def _energy_grad_np(lat, rows, pos, u, c, rs_tab, w_tab, kind, a, b):
    n, M = rows.size, lat.shape[0]
    en, op = np.zeros(n), np.zeros(n)
    mult = np.where(pos >= 0, 1.0, 2.0)
    for blk in _blocks(n, M):
        rb = rows[blk]
        rs, w = _geometry(lat, rb, rs_tab, w_tab)
        D = (u[rb][:, None] - u[None, :]) / rs
        ad = np.abs(D)
        wc = w * c[None, :]
        en[blk] = np.sum(mult * _np_G(kind, a, b, ad) * wc, axis=1) * c[rb]
        op[blk] = 2.0 * np.sum(np.sign(D) * _np_g(kind, a, b, ad) * wc / rs, axis=1)
    return en, op


def _hessian_np(lat, rows, pos, u, c, rs_tab, w_tab, kind, a, b):
    n, M = rows.size, lat.shape[0]
    H = np.zeros((n, n))
    cols = np.flatnonzero(pos >= 0)
    for blk in _blocks(n, M):
        rb = rows[blk]
        rs, w = _geometry(lat, rb, rs_tab, w_tab)
        ad = np.abs((u[rb][:, None] - u[None, :]) / rs)
        val = 2.0 * _np_gp(kind, a, b, ad) * w * c[None, :] * c[rb][:, None] / (rs * rs)
        sub = np.zeros((rb.size, n))
        sub[:, pos[cols]] = -val[:, cols]
        sub[np.arange(rb.size), np.arange(blk.start, blk.stop)] += val.sum(axis=1)
        H[blk] = sub
    return H


def _pairing_np(lat, rows, pos, u, v, c, rs_tab, w_tab, kind, a, b):
    n, M = rows.size, lat.shape[0]
    out = np.zeros(n)
    mult = np.where(pos >= 0, 1.0, 2.0)
    for blk in _blocks(n, M):
        rb = rows[blk]
        rs, w = _geometry(lat, rb, rs_tab, w_tab)
        D = (u[rb][:, None] - u[None, :]) / rs
        Dv = (v[rb][:, None] - v[None, :]) / rs
        gD = np.sign(D) * _np_g(kind, a, b, np.abs(D))
        out[blk] = np.sum(mult * gD * Dv * w * c[None, :], axis=1) * c[rb]
    return out


def _extrema_np(lat, rows, u, rs_tab):
    n, M = rows.size, lat.shape[0]
    hi, lo = np.empty(n), np.empty(n)
    for blk in _blocks(n, M):
        rb = rows[blk]
        d0 = np.abs(lat[None, :, 0] - lat[rb, 0][:, None])
        d1 = np.abs(lat[None, :, 1] - lat[rb, 1][:, None])
        q = (u[rb][:, None] - u[None, :]) / rs_tab[d0, d1]
        q[np.arange(rb.size), rb] = np.nan
        hi[blk] = np.nanmax(q, axis=1)
        lo[blk] = np.nanmin(q, axis=1)
    return hi, lo


# ---------------------------------------------------------------------------
# dispatch


def _args(grid, rows):
    _, rs_tab, w_tab = grid.offset_tables
    rows = grid.interior if rows is None else np.asarray(rows, dtype=np.int64)
    return grid.lattice, rows, grid.position, grid.cell_measures, rs_tab, w_tab


def energy_grad_rows(grid, u, code, rows=None, backend_name=None):
    """Per-row modular contributions and operator sums.

    Returns ``(en, op)`` with
    ``en_i = c_i * sum_j m_j G(|D_ij|) c_j / r^N`` (``m_j = 2`` for exterior
    ``j``, accounting for the mirrored ordered pair) and
    ``op_i = 2 * sum_j g(D_ij) c_j / r^(N+s)``, both unscaled.
    """
    kind, a, b, _ = code
    lat, rows, pos, c, rs_tab, w_tab = _args(grid, rows)
    fn = _energy_grad_nb if backend(backend_name) == "numba" else _energy_grad_np
    return fn(lat, rows, pos, np.ascontiguousarray(u, dtype=float), c, rs_tab, w_tab, kind, a, b)


def hessian_rows(grid, u, code, rows=None, backend_name=None):
    """Unscaled Hessian of the pair modular restricted to interior unknowns."""
    kind, a, b, _ = code
    lat, rows, pos, c, rs_tab, w_tab = _args(grid, rows)
    fn = _hessian_nb if backend(backend_name) == "numba" else _hessian_np
    return fn(lat, rows, pos, np.ascontiguousarray(u, dtype=float), c, rs_tab, w_tab, kind, a, b)


def pairing_rows(grid, u, v, code, rows=None, backend_name=None):
    """Per-row ``c_i * sum_j m_j g(D^s u) D^s v c_j / r^N`` (unscaled)."""
    kind, a, b, _ = code
    lat, rows, pos, c, rs_tab, w_tab = _args(grid, rows)
    fn = _pairing_nb if backend(backend_name) == "numba" else _pairing_np
    return fn(
        lat, rows, pos, np.ascontiguousarray(u, dtype=float), np.ascontiguousarray(v, dtype=float),
        c, rs_tab, w_tab, kind, a, b,
    )


def quotient_extrema(grid, u, rows=None, backend_name=None):
    """Max and min over all nodes ``j != i`` of ``(u_i - u_j) / |x_i - x_j|^s``."""
    lat, rows, _, _, rs_tab, _ = _args(grid, rows)
    fn = _extrema_nb if backend(backend_name) == "numba" else _extrema_np
    return fn(lat, rows, np.ascontiguousarray(u, dtype=float), rs_tab)
