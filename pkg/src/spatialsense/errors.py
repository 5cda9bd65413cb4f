"""Exception types shared across the package."""


class SenseError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(SenseError):
    """Operand dimensions are incompatible with the requested operation."""

    def __init__(self, message, left=None, right=None):
        super().__init__(message)
        self.left = left
        self.right = right


class DomainError(SenseError):
    """A scalar argument is outside its valid domain."""


class ConfigError(SenseError):
    """Inconsistent or unknown configuration value."""


class GeometryError(SenseError):
    """Antenna geometry cannot support the requested processing."""

    def __init__(self, message, missing_lag=None):
        super().__init__(message)
        self.missing_lag = missing_lag


class ConvergenceError(SenseError):
    """An iterative solver ran out of iterations."""

    def __init__(self, message, off_diagonal_norm=None):
        super().__init__(message)
        self.off_diagonal_norm = off_diagonal_norm
