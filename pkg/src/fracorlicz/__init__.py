"""Numerical lab for fractional Orlicz-Sobolev Dirichlet problems and their p -> infinity limits."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    CertificationError,
    DomainError,
    NumericError,
    PropertyViolation,
    SingularityError,
    SingularityWarning,
)
from .grid import Domain, Grid, GridFunction, build_grid, dist_oracle, parse_domain
from .orlicz import OrliczFamily, certify_growth, parse_family
from .solver import SolverConfig, SolveResult, solve

__all__ = [
    "__version__",
    "CertificationError",
    "DomainError",
    "NumericError",
    "PropertyViolation",
    "SingularityError",
    "SingularityWarning",
    "Domain",
    "Grid",
    "GridFunction",
    "build_grid",
    "dist_oracle",
    "parse_domain",
    "OrliczFamily",
    "certify_growth",
    "parse_family",
    "SolverConfig",
    "SolveResult",
    "solve",
]
