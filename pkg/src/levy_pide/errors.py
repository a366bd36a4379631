"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class LevyPideError(Exception):
    """Base class for errors raised by this package."""


class DomainError(LevyPideError, ValueError):
    """A parameter or argument violates a model or operator domain."""


class ConvergenceError(LevyPideError, ArithmeticError):
    """An iterative method failed to reach its tolerance."""

    def __init__(self, message: str, iterations: int | None = None, residual: float | None = None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class GridError(DomainError):
    """A grid is degenerate or unsuitable for the requested stencil."""


class CapacityError(LevyPideError):
    """A dense problem exceeds the configured size cap."""


class StabilityError(DomainError):
    """The space step is above the stability bound of a scheme."""


class SolveError(LevyPideError, ArithmeticError):
    """A (banded) linear factorization or solve failed."""
