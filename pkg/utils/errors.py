"""
Exception hierarchy for the reachability engine.

Input problems stay ``ValueError`` subclasses so callers that only care about
"bad argument" can keep catching ``ValueError``. Numerical failures derive from
``ArithmeticError``; the command line maps them to exit code 3.
"""
from typing import Any, Optional


class ReachError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ReachError, ValueError):
    """Malformed configuration, system description, trace or coordinate list."""


class DegenerateEllipsoidError(ReachError, ValueError):
    """Shape matrix is flat (smallest eigenvalue below the relative floor)."""


class NumericalError(ReachError, ArithmeticError):
    """A numerical kernel could not produce a trustworthy answer."""


class NotPositiveDefiniteError(NumericalError, ValueError):
    """Matrix expected to be positive definite is not."""


class ConvergenceError(NumericalError):
    """Iterative method hit its iteration cap."""


class PropagationAbort(NumericalError):
    """Shape matrix lost definiteness beyond what clamping may repair."""

    def __init__(self, message: str, time: Optional[float] = None, direction: Optional[int] = None):
        super().__init__(message)
        self.time = time
        self.direction = direction


class FusionConvergenceError(ConvergenceError):
    """
    Fusion hit its iteration cap.

    The last iterate is still a feasible multiplier vector, so ``partial``
    holds a sound (if not optimal) fusion result.
    """

    def __init__(self, message: str, partial: Any = None):
        super().__init__(message)
        self.partial = partial
