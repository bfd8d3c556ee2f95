"""Exception hierarchy shared across the package."""


class AffineShapeError(Exception):
    """Base class for all package errors."""


class DimensionError(AffineShapeError, ValueError):
    """Operand shapes are inconsistent."""


class AlgebraError(AffineShapeError, ValueError):
    """Operation is not available for the requested algebra."""


class NotHermitianError(AffineShapeError, ValueError):
    pass


class NotPositiveDefiniteError(AffineShapeError, ValueError):
    pass


class DomainError(AffineShapeError, ValueError):
    """Argument outside the domain of a special function."""


class ConvergenceError(AffineShapeError, RuntimeError):
    """A series, quadrature or optimizer did not reach its tolerance."""


class DegenerateConfigurationError(AffineShapeError, ValueError):
    """The leading K x K block of a reduced landmark matrix is singular."""
