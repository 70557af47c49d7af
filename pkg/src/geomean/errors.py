"""Exception types shared across the package."""


class GeomeanError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(GeomeanError, ValueError):
    """Operands have incompatible shapes."""


class NotPositiveDefiniteError(GeomeanError):
    """A matrix that must be (symmetric) positive definite is not.

    Raised when an eigenvalue check fails, when CG detects an indefinite
    direction, or when a projected matrix loses definiteness mid-run.
    """


class SingularMatrixError(GeomeanError):
    """A small dense matrix is singular to working tolerance."""


class ConvergenceError(GeomeanError):
    """An iteration failed to converge within its budget."""


class MatrixFormatError(GeomeanError, ValueError):
    """A matrix file is malformed or uses an unsupported field type."""
