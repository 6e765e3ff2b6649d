"""Exception and warning types raised across the package."""


class VQMError(Exception):
    """Base class for all package errors."""


class NotHermitian(VQMError, ValueError):
    pass


class BadIndex(VQMError, IndexError):
    pass


class BadShape(VQMError, ValueError):
    pass


class ShapeMismatch(BadShape):
    pass


class BadProbability(VQMError, ValueError):
    pass


class KrausIncomplete(VQMError, ValueError):
    pass


class DegenerateBound(VQMError, ArithmeticError):
    pass


class TooLarge(VQMError, ValueError):
    pass


class ConfigError(VQMError, ValueError):
    """Invalid experiment configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalFailure(VQMError, ArithmeticError):
    """A NaN or infinity reached an emitted quantity."""


class SingularInfoWarning(UserWarning):
    """A Fisher matrix is rank-deficient; bounds were taken with a pseudo-inverse."""
