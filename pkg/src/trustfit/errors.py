"""Exception types raised by trustfit."""


class TrustFitError(Exception):
    """Base class for all trustfit errors."""


class EvaluationError(TrustFitError):
    """A model produced a non-finite value or partial derivative."""

    def __init__(self, message, index=None, param_index=None):
        super().__init__(message)
        self.index = index
        self.param_index = param_index


class NumericFailure(TrustFitError):
    """An iterative numerical kernel failed to converge."""


class NotPositiveDefiniteError(TrustFitError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot):
        super().__init__(f"matrix is not positive definite (pivot {pivot})")
        self.pivot = pivot


class SingularFactorError(TrustFitError):
    """A triangular factor has a zero on its diagonal."""

    def __init__(self, index):
        super().__init__(f"triangular factor is singular (zero diagonal at {index})")
        self.index = index


class FixedSizeExceededError(TrustFitError):
    """The data is longer than the configured fixed buffer size."""

    def __init__(self, v, s):
        super().__init__(
            f"data length {v} exceeds fixed size {s}; "
            "use a larger fixed size or a separate fit session for this length"
        )
        self.v = v
        self.s = s


class CapacityError(TrustFitError):
    """Input is too large for the requested mode."""
