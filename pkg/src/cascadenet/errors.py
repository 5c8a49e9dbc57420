"""Exception types raised across the package."""


class CascadeError(Exception):
    """Base class for all package errors."""


class InvalidDimension(CascadeError, ValueError):
    pass


class NotHermitian(CascadeError, ValueError):
    pass


class NetworkValidationError(CascadeError, ValueError):
    """Malformed network description. ``path`` names the offending field."""

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class UnsupportedCoupling(CascadeError, ValueError):
    pass


class TruncationInsufficient(CascadeError, ValueError):
    pass


class InconsistentCoefficients(CascadeError, ValueError):
    pass


class NegativeRate(CascadeError, ValueError):
    """A Kossakowski eigenvalue is negative beyond numerical noise."""


class PhysicalityViolation(CascadeError, RuntimeError):
    """A trajectory sample broke the trace, Hermiticity or positivity bound."""

    def __init__(self, message, sample=None):
        self.sample = sample
        super().__init__(message)
