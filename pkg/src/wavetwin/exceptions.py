"""Exception types raised across the package."""


class WaveTwinError(Exception):
    """Base class for package errors."""


class InvalidInputError(WaveTwinError, ValueError):
    """Raised when an argument violates a documented precondition."""


class NumericalInstabilityError(WaveTwinError, ArithmeticError):
    """Raised when a solver produces non-finite values."""


class DegenerateEnsembleError(WaveTwinError, ArithmeticError):
    """Raised when the innovation covariance cannot be factorized."""


class ConfigError(WaveTwinError):
    """Raised for unreadable or inconsistent experiment configuration."""
