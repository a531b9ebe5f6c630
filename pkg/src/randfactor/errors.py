"""Exception hierarchy shared by all modules."""


class RandFactorError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(RandFactorError, ValueError):
    """Array shapes or lengths are incompatible."""


class DegenerateSampleError(RandFactorError, ValueError):
    """Too few observations for the requested statistic."""


class DomainError(RandFactorError, ValueError):
    """An input lies outside the domain of the operation."""


class ZeroVarianceError(RandFactorError, ValueError):
    """A series has zero sample variance where a positive one is required."""

    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"column {column} has zero variance")


class PreconditionError(RandFactorError, ValueError):
    """An input violates a documented precondition (e.g. uncentered data)."""


class NotElementIIDError(RandFactorError, ValueError):
    """Moments requested for a family whose elements are not i.i.d."""


class DecompositionError(RandFactorError, ArithmeticError):
    """The numerical SVD failed or produced non-finite output."""


class ConfigError(RandFactorError, ValueError):
    """Invalid configuration (unknown key, bad value, missing field)."""
