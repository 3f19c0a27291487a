"""Exception types shared across the package.

The CLI maps :class:`ParameterError` to exit code 2 and
:class:`NumericalError` (including :class:`SingularSystemError` and
:class:`UnsupportedRegimeError`) to exit code 3.
"""


class ParameterError(ValueError):
    """A model parameter or argument violates its documented domain."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (singular system, bad discretization)."""


class SingularSystemError(NumericalError):
    """A linear system's pivot fell below the singularity tolerance."""

    def __init__(self, message: str, condition_estimate: float | None = None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class UnsupportedRegimeError(NumericalError):
    """The parameters leave the regime in which a closed form is valid."""
