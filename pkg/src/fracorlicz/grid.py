"""Uniform lattices on intervals, boxes and disks with an exterior collar.

A grid covers the domain and every lattice point within distance ``R`` of
it. Nodes strictly inside the domain are *interior*; all others (including
lattice points that fall exactly on the boundary) carry the homogeneous
exterior value 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DomainError

__all__ = [
    "Domain",
    "Grid",
    "GridFunction",
    "parse_domain",
    "build_grid",
    "holder_quotient",
    "mu_weight",
    "dist_oracle",
    "ridge_mask",
    "unit_ball_measure",
]

_EPS = 1e-12


def unit_ball_measure(N: int) -> float:
    """``omega_N``: Lebesgue measure of the unit ball (2 in 1D, pi in 2D)."""
    return {1: 2.0, 2: math.pi}[N]


@dataclass(frozen=True)
class Domain:
    """Interval, axis-aligned box or disk.

    ``bounds`` holds ``(lo, hi)`` per axis for intervals and boxes; disks
    use ``center`` and ``radius``.
    """

    kind: str
    bounds: tuple[tuple[float, float], ...] = ()
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0

    def __post_init__(self):
        if self.kind in ("interval", "box"):
            want = 1 if self.kind == "interval" else 2
            if len(self.bounds) != want:
                raise DomainError(f"{self.kind} needs {want} coordinate range(s)")
            for lo, hi in self.bounds:
                if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
                    raise DomainError(f"degenerate range ({lo}, {hi})")
        elif self.kind == "disk":
            if not (math.isfinite(self.radius) and self.radius > 0):
                raise DomainError(f"disk radius must be positive, got {self.radius}")
        else:
            raise DomainError(f"unknown domain kind {self.kind!r}")

    @property
    def dimension(self) -> int:
        return 1 if self.kind == "interval" else 2

    @property
    def measure(self) -> float:
        if self.kind == "disk":
            return math.pi * self.radius**2
        return math.prod(hi - lo for lo, hi in self.bounds)

    @property
    def diameter(self) -> float:
        if self.kind == "disk":
            return 2.0 * self.radius
        return math.hypot(*(hi - lo for lo, hi in self.bounds))

    def boundary_distance(self, pts: np.ndarray) -> np.ndarray:
        """``dist(x, boundary)`` for points inside the closed domain (0 outside)."""
        pts = np.atleast_2d(pts)
        if self.kind == "disk":
            d = self.radius - np.linalg.norm(pts - np.asarray(self.center), axis=1)
        else:
            d = np.min(
                [np.minimum(pts[:, k] - lo, hi - pts[:, k]) for k, (lo, hi) in enumerate(self.bounds)],
                axis=0,
            )
        return np.maximum(d, 0.0)

    def outside_distance(self, pts: np.ndarray) -> np.ndarray:
        """``dist(x, domain)`` (0 inside)."""
        pts = np.atleast_2d(pts)
        if self.kind == "disk":
            return np.maximum(np.linalg.norm(pts - np.asarray(self.center), axis=1) - self.radius, 0.0)
        gaps = [
            np.maximum.reduce([lo - pts[:, k], pts[:, k] - hi, np.zeros(len(pts))])
            for k, (lo, hi) in enumerate(self.bounds)
        ]
        return np.sqrt(np.sum(np.square(gaps), axis=0))

    def spec(self) -> str:
        if self.kind == "disk":
            extra = "" if self.center == (0.0, 0.0) else f",cx={self.center[0]:g},cy={self.center[1]:g}"
            return f"disk:r={self.radius:g}{extra}"
        return f"{self.kind}:" + ",".join(f"{v:g}" for b in self.bounds for v in b)


def parse_domain(spec: str | Domain) -> Domain:
    """Parse ``"interval:-1,1"``, ``"box:-1,1,-1,1"`` or ``"disk:r=1"``."""
    if isinstance(spec, Domain):
        return spec
    head, sep, body = str(spec).partition(":")
    if not sep:
        raise DomainError(f"malformed domain spec {spec!r}")
    head = head.strip().lower()
    items = [x.strip() for x in body.split(",") if x.strip()]
    try:
        if head in ("interval", "box"):
            vals = [float(v) for v in items]
            if len(vals) % 2:
                raise DomainError(f"odd number of bounds in {spec!r}")
            return Domain(head, tuple(zip(vals[::2], vals[1::2])))
        if head == "disk":
            kv = {k.strip().lower(): float(v) for k, v in (x.split("=", 1) for x in items)}
            unknown = kv.keys() - {"r", "cx", "cy"}
            if unknown:
                raise DomainError(f"unknown keys {sorted(unknown)} in {spec!r}")
            return Domain("disk", center=(kv.get("cx", 0.0), kv.get("cy", 0.0)), radius=kv["r"])
    except DomainError:
        raise
    except (ValueError, KeyError):
        raise DomainError(f"malformed domain spec {spec!r}") from None
    raise DomainError(f"unknown domain kind {head!r}")


@dataclass(frozen=True, eq=False)
class Grid:
    """Vertex-centered uniform lattice over a domain plus its exterior collar.

    Attributes
    ----------
    domain : Domain
    nodes : ndarray, shape (M, N)
        Node coordinates.
    lattice : ndarray of int, shape (M, 2)
        Integer lattice coordinates (second column is 0 in 1D).
    spacing : tuple of float
        Lattice spacing per axis.
    interior_mask : ndarray of bool, shape (M,)
    cell_measures : ndarray, shape (M,)
    s : float
        Fractional order.
    R : float
        Truncation radius of the pair set.
    """

    domain: Domain
    nodes: np.ndarray
    lattice: np.ndarray
    spacing: tuple[float, ...]
    interior_mask: np.ndarray
    cell_measures: np.ndarray
    s: float
    R: float

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def h(self) -> float:
        return max(self.spacing)

    @cached_property
    def interior(self) -> np.ndarray:
        """Indices of interior nodes."""
        return np.flatnonzero(self.interior_mask)

    @property
    def n_interior(self) -> int:
        return int(self.interior.size)

    @cached_property
    def position(self) -> np.ndarray:
        """Map node index to its rank among interior nodes (-1 if exterior)."""
        pos = np.full(self.n_nodes, -1, dtype=np.int64)
        pos[self.interior] = np.arange(self.n_interior)
        return pos

    @cached_property
    def offset_tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Tables over absolute lattice offsets ``(|dk0|, |dk1|)``.

        Returns ``(r, r**s, w)`` where ``w = r**-N`` for ``0 < r <= R`` and 0
        otherwise (also 0 at the zero offset).
        """
        span = self.lattice.max(axis=0) - self.lattice.min(axis=0) + 1
        hx = self.spacing[0]
        hy = self.spacing[1] if self.dimension == 2 else 0.0
        d0 = np.arange(span[0])[:, None] * hx
        d1 = np.arange(span[1])[None, :] * hy
        r = np.sqrt(d0**2 + d1**2)
        with np.errstate(divide="ignore"):
            rs = r**self.s
            w = np.where((r > 0) & (r <= self.R * (1 + _EPS)), r ** (-float(self.dimension)), 0.0)
        rs[0, 0] = 1.0
        return r, rs, w

    def distance(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self.nodes[i] - self.nodes[j]))

    def zeros(self) -> GridFunction:
        return GridFunction(self, np.zeros(self.n_nodes))

    def from_interior(self, values) -> GridFunction:
        """Zero-extended grid function with the given interior values."""
        vals = np.zeros(self.n_nodes)
        vals[self.interior] = np.asarray(values, dtype=float)
        return GridFunction(self, vals)

    def sample(self, func, zero_extend: bool = True) -> GridFunction:
        """Evaluate ``func(coords)`` (coords shape (k, N)) at the nodes."""
        if zero_extend:
            return self.from_interior(func(self.nodes[self.interior]))
        return GridFunction(self, np.asarray(func(self.nodes), dtype=float).copy())

    def describe(self) -> dict:
        return {
            "domain": self.domain.spec(),
            "n_interior": self.n_interior,
            "n_nodes": self.n_nodes,
            "spacing": list(self.spacing),
            "s": self.s,
            "R": self.R,
        }


def build_grid(spec: str | Domain, n_interior: int, s: float, R: float | None = None) -> Grid:
    """Build the lattice.

    Parameters
    ----------
    spec : str or Domain
        Domain descriptor.
    n_interior : int
        Number of interior nodes in 1D; nodes per axis across the domain in 2D.
    s : float
        Fractional order in ``(0, 1)``.
    R : float, optional
        Truncation radius, at least ``2 * diam``; defaults to ``2 * diam``.
    """
    dom = parse_domain(spec)
    if int(n_interior) != n_interior or n_interior < 8:
        raise DomainError(f"n_interior must be an integer >= 8, got {n_interior}")
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie in (0, 1), got {s}")
    n = int(n_interior)
    if R is None:
        R = 2.0 * dom.diameter
    if not R >= 2.0 * dom.diameter * (1 - _EPS):
        raise DomainError(f"R = {R} is below 2 * diam = {2 * dom.diameter}")

    if dom.kind == "disk":
        h = 2.0 * dom.radius / (n + 1)
        origins = [c - dom.radius for c in dom.center]
        spacing = (h, h)
    else:
        spacing = tuple((hi - lo) / (n + 1) for lo, hi in dom.bounds)
        origins = [lo for lo, _ in dom.bounds]

    axes_k = []
    for h in spacing:
        K = int(math.ceil(R / h)) + 1
        axes_k.append(np.arange(-K, n + 2 + K))
    if dom.dimension == 1:
        lat = np.stack([axes_k[0], np.zeros_like(axes_k[0])], axis=1)
    else:
        k0, k1 = np.meshgrid(axes_k[0], axes_k[1], indexing="ij")
        lat = np.stack([k0.ravel(), k1.ravel()], axis=1)
    coords = np.stack(
        [origins[d] + lat[:, d] * spacing[d] for d in range(dom.dimension)], axis=1
    )
    keep = dom.outside_distance(coords) <= R * (1 + _EPS)
    coords, lat = coords[keep], lat[keep].astype(np.int64)
    # round-off safe interior test: strictly inside by more than a tiny margin
    inside = dom.boundary_distance(coords) > _EPS * max(1.0, dom.diameter)
    if dom.kind == "disk":
        inside &= dom.outside_distance(coords) == 0.0
    cell = math.prod(spacing)
    grid = Grid(
        domain=dom,
        nodes=coords,
        lattice=lat,
        spacing=spacing,
        interior_mask=inside,
        cell_measures=np.full(coords.shape[0], cell),
        s=float(s),
        R=float(R),
    )
    if grid.n_interior == 0:
        raise DomainError("grid has no interior nodes")
    return grid


class GridFunction:
    """Real values on the nodes of a `Grid`."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        vals = np.asarray(values, dtype=float)
        if vals.shape != (grid.n_nodes,):
            raise ValueError(f"expected {grid.n_nodes} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("grid function values must be finite")
        self.grid = grid
        self.values = vals

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[self.grid.interior]

    @property
    def is_zero_extended(self) -> bool:
        return not np.any(self.values[~self.grid.interior_mask])

    def require_zero_extended(self) -> None:
        if not self.is_zero_extended:
            raise DomainError("grid function must vanish outside the domain")

    def copy(self) -> GridFunction:
        return GridFunction(self.grid, self.values.copy())

    def _coerce(self, other):
        if isinstance(other, GridFunction):
            if other.grid is not self.grid:
                raise ValueError("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._coerce(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __repr__(self) -> str:
        return f"GridFunction(n_nodes={self.grid.n_nodes}, max|u|={np.max(np.abs(self.values)):.4g})"

    def integrate(self) -> float:
        """Quadrature of the function over the domain (interior nodes)."""
        idx = self.grid.interior
        return float(np.sum(self.values[idx] * self.grid.cell_measures[idx]))

    def to_csv(self, path: str | Path, interior_only: bool = False) -> None:
        cols = ["x", "y"][: self.grid.dimension]
        idx = self.grid.interior if interior_only else np.arange(self.grid.n_nodes)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([*cols, "value"])
            for k in idx:
                w.writerow([*(repr(float(c)) for c in self.grid.nodes[k]), repr(float(self.values[k]))])

    @classmethod
    def from_csv(cls, grid: Grid, path: str | Path) -> GridFunction:
        """Read values written by `to_csv` (``#`` comment lines allowed); unlisted nodes are 0."""
        lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
        data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]], dtype=float).reshape(
            -1, grid.dimension + 1
        )
        coords, vals = data[:, : grid.dimension], data[:, grid.dimension]
        out = np.zeros(grid.n_nodes)
        origin = np.array([grid.nodes[:, d].min() for d in range(grid.dimension)])
        lat_min = grid.lattice.min(axis=0)[: grid.dimension]
        key = {tuple(k): n for n, k in enumerate(grid.lattice[:, : grid.dimension].tolist())}
        for c, v in zip(coords, vals):
            k = tuple(int(round(x)) for x in (c - origin) / np.array(grid.spacing) + lat_min)
            if k not in key:
                raise ValueError(f"CSV coordinate {c.tolist()} is not a grid node")
            out[key[k]] = v
        return cls(grid, out)


def holder_quotient(u: GridFunction, i: int, j: int) -> float:
    """``(u(x_i) - u(x_j)) / |x_i - x_j|^s``."""
    if i == j:
        raise ValueError("holder quotient is undefined on the diagonal")
    g = u.grid
    return float((u.values[i] - u.values[j]) / g.distance(i, j) ** g.s)


def mu_weight(grid: Grid, i: int, j: int) -> float:
    """Quadrature weight of ``dx dy / |x - y|^N`` at the pair ``(i, j)``."""
    if i == j:
        raise ValueError("the diagonal pair carries no weight")
    r = grid.distance(i, j)
    return float(grid.cell_measures[i] * grid.cell_measures[j] / r**grid.dimension)


def dist_oracle(grid: Grid) -> GridFunction:
    """``dist(x, boundary)^s`` on interior nodes, 0 elsewhere."""
    d = grid.domain.boundary_distance(grid.nodes[grid.interior])
    return grid.from_interior(d**grid.s)


def ridge_mask(grid: Grid) -> np.ndarray:
    """Interior nodes within one spacing of the ridge of ``dist(., boundary)``.

    The ridge is where the nearest boundary point is not unique; there
    ``dist^s`` is not differentiable.
    """
    pts = grid.nodes[grid.interior]
    dom = grid.domain
    if dom.kind == "disk":
        near = np.linalg.norm(pts - np.asarray(dom.center), axis=1) < grid.h * (1 + 1e-9)
    else:
        faces = np.concatenate(
            [np.stack([pts[:, k] - lo, hi - pts[:, k]], axis=1) for k, (lo, hi) in enumerate(dom.bounds)],
            axis=1,
        )
        two = np.sort(faces, axis=1)[:, :2]
        near = two[:, 1] - two[:, 0] < grid.h * (1 + 1e-9)
    mask = np.zeros(grid.n_nodes, dtype=bool)
    mask[grid.interior[near]] = True
    return mask
