"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """Argument outside the domain of a function (e.g. a non-finite input)."""


class SingularityError(ArithmeticError):
    """Evaluation at a point where the requested quantity is not finite."""


class SingularityWarning(RuntimeWarning):
    """A pointwise operator is evaluated outside its convergence regime."""


class NumericError(ArithmeticError):
    """An iterative numerical procedure failed (bracketing, NaN, ...)."""


class CertificationError(AssertionError):
    """A sampled growth inequality was violated.

    Attributes
    ----------
    inequality : str
        Name of the first violated inequality.
    slack : float
        Worst (negative) log-slack observed for it.
    """

    def __init__(self, inequality: str, slack: float):
        super().__init__(f"inequality {inequality} violated (worst log-slack {slack:.3e})")
        self.inequality = inequality
        self.slack = slack


class PropertyViolation(AssertionError):
    """A numerical property check failed; carries the offending node."""

    def __init__(self, message: str, node: int | None = None, amount: float | None = None):
        super().__init__(message)
        self.node = node
        self.amount = amount
