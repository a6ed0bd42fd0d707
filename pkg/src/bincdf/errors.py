"""Exception types shared across the package."""


class BincdfError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(BincdfError, ValueError):
    """Invalid input data, configuration, or arguments."""


class NumericalError(BincdfError, ArithmeticError):
    """A numerical routine failed to converge or produced nonsense."""
