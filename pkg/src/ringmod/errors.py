"""Exception types shared across the package.

The split is semantic: InputError covers bad arguments caught up front,
DomainError covers points handed to a map outside its domain, the rest
signal conditions discovered during a computation.
"""

from __future__ import annotations


class InputError(ValueError):
    """Arguments fail validation (wrong dimension, parameters out of range)."""


class DomainError(InputError):
    """A point lies outside the domain of the requested map or field."""


class DegenerateProfileError(InputError):
    """A radial weight vanishes or is non-finite where the profile needs it."""


class IntegralDivergenceError(ArithmeticError):
    """A requested integral diverges (or fails the convergence checks)."""

    def __init__(self, message: str, partials: list[tuple[float, float]] | None = None):
        super().__init__(message)
        self.partials = partials or []


class PreconditionError(RuntimeError):
    """A construction was refused because its hypotheses were not verified."""


class ContractViolationError(RuntimeError):
    """A quantity that must hold by construction failed its numerical check."""


class SolverStallError(RuntimeError):
    """The iterative solver stopped making progress before reaching tolerance."""

    def __init__(self, message: str, iterates: list[dict] | None = None):
        super().__init__(message)
        self.iterates = iterates or []
