"""Exception types raised across the package."""


class DimensionMismatchError(ValueError):
    """A vector or operand does not conform to the matrix block layout."""


class NotPositiveDefiniteError(ValueError):
    """A matrix (or one of its diagonal blocks) failed a Cholesky factorization.

    Attributes
    ----------
    block : int or None
        1-based index of the failing diagonal block, or None when the
        failure concerns a whole assembled matrix.
    """

    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


class NonPositiveCurvatureError(ArithmeticError):
    """PCG met a search direction with p^T A p <= 0 (input is not s.p.d.)."""


class SchurNotSpdError(ValueError):
    """A generated Schur complement failed s.p.d. validation."""
