"""Exception types shared across the package."""


class NotPositiveDefinite(ValueError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot, message=None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not positive definite (pivot {pivot})")


class BoundaryPoint(ValueError):
    """A barrier evaluation was requested outside the strict interior."""


class Infeasible(RuntimeError):
    pass


class MaxIterations(RuntimeError):
    pass


class InvalidModel(ValueError):
    pass


class SingularFeedbackNoise(ValueError):
    """The feedback noise covariance is not positive definite."""


class IdentityViolation(AssertionError):
    def __init__(self, which, magnitude):
        self.which = which
        self.magnitude = magnitude
        super().__init__(f"{which} violated by {magnitude:.3e}")


class ConfigError(ValueError):
    pass
