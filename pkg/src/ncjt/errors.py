"""Exception hierarchy shared by every module."""


class NcjtError(Exception):
    """Base class for all package errors."""


class DomainError(NcjtError, ValueError):
    """An argument lies outside the domain where a function is defined."""


class QuadratureError(NcjtError, ArithmeticError):
    """Numerical integration did not reach the requested tolerance."""

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class DerivativeCapError(NcjtError, ArithmeticError):
    """The derivative order required by the CDF series exceeds the configured cap.

    Callers should fall back to the tail-remainder series or to Monte Carlo.
    """

    def __init__(self, required, cap):
        super().__init__(
            f"derivative order {required} exceeds cap {cap}; "
            "use cdf_tail_remainder with a larger cap or the Monte Carlo simulator"
        )
        self.required = required
        self.cap = cap
