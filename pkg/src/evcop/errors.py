"""Exception types shared across the package."""


class EvcopError(Exception):
    """Base class for all package-specific errors."""


class InputError(EvcopError, ValueError):
    """Malformed or out-of-contract user input (CLI exit code 2)."""


class NumericalError(EvcopError, RuntimeError):
    """Numerical breakdown: divergence, overflow, failed bracketing (CLI exit code 3)."""
