"""
Exception hierarchy for the singular-quad library.
Every error raised on purpose by the library derives from QuadratureError, so entry
points (cli.py, app.py) can catch one type and report it.
"""

from typing import Optional


class QuadratureError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(QuadratureError, ValueError):
    """A mesh, step, sample vector or grid that violates its preconditions."""


class UnsupportedOrderError(InvalidArgumentError):
    def __init__(self, order, message: Optional[str] = None):
        self.order = order
        super().__init__(message or f"Unsupported scheme order: {order}")


class InsufficientHistoryError(QuadratureError):
    """
    Raised when a stencil needs more backward samples than were supplied.

    Args:
        required: Number of samples the stencil needs
        available: Number of samples supplied; also the highest order the caller
            can fall back to
    """

    def __init__(self, required: int, available: int):
        self.required = required
        self.available = available
        self.available_order = available
        super().__init__(
            f"Stencil needs {required} backward samples, got {available}; "
            f"reduce the order to {available}"
        )


class SingularEvaluationError(QuadratureError, ValueError):
    """Pointwise evaluation of a weakly singular kernel at t = 0."""


class InvalidKernelError(QuadratureError, ValueError):
    """Kernel that is not integrable on [0, T] or whose definition is malformed."""


class AccuracyError(QuadratureError, RuntimeError):
    def __init__(self, message: str, abserr: float):
        self.abserr = abserr
        super().__init__(f"{message} (estimated error {abserr:.3e})")


class NonInvertibleStepError(QuadratureError, RuntimeError):
    def __init__(self, n: int, detail: str = ""):
        self.n = n
        text = f"Step matrix is not invertible at n={n}"
        if detail:
            text = f"{text}: {detail}"
        super().__init__(text)


class UnsupportedSolutionError(QuadratureError, ValueError):
    """No closed-form convolution is available for the requested exact solution."""


class ConfigError(QuadratureError, ValueError):
    """Invalid value in the environment configuration."""
