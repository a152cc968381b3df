"""Exception classes shared across the package."""


class KraftyError(Exception):
    """Base class for all package errors."""


class InputError(KraftyError, ValueError):
    """Raised when arguments violate a documented precondition."""


class NumericError(KraftyError, ArithmeticError):
    """Raised when a numerical routine fails (e.g. SVD non-convergence)."""


class RankWarning(UserWarning):
    """Requested dimension exceeds the numerical rank that is available."""


class LowConfidenceWarning(UserWarning):
    """An estimate was produced from degenerate (uninformative) input."""
