"""Exception types shared across the package."""


class MatrixFormatError(ValueError):
    """A matrix file could not be parsed; the message names the location."""


class ConfigError(ValueError):
    """A configuration value is missing, unknown or out of range."""


class DegenerateInputError(ValueError):
    """The input carries no usable signal (for example an all-zero matrix)."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite values or failed to converge."""


class DivergenceError(NumericalError):
    """An iterative solver left the region of bounded iterates."""
