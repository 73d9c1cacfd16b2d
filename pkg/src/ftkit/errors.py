"""Exception hierarchy shared by all ftkit modules."""


class FtkitError(Exception):
    """Base class for toolkit errors."""


class ValidationError(FtkitError, ValueError):
    """An input violates a documented precondition."""


class LadderError(ValidationError):
    """The exponent recursion hits a non-positive denominator."""


class MarginUndefinedError(ValidationError):
    """The fixed-time margin needs real closed-loop roots."""


class NotHurwitzError(ValidationError):
    """The matrix has an eigenvalue outside the open left half-plane."""


class NumericalError(FtkitError, ArithmeticError):
    """A linear solve or iteration failed numerically."""


class BlowUpError(NumericalError):
    """Integration produced a non-finite state."""

    def __init__(self, time: float, message: str | None = None):
        self.time = time
        super().__init__(message or f"non-finite state at t={time:.6g}")


class ReferenceLookupError(FtkitError, LookupError):
    """No embedded reference row matches the request."""
