"""Exception types shared across the package.

Numerical failures are never papered over with jitter or silent
fallbacks; they surface as one of these exceptions so callers can decide
how to record them (the simulation harness, for instance, maps singular
OLS fits to "NA" cells instead of aborting).
"""


class TwoStepError(Exception):
    """Base class for all errors raised by this package."""


class SingularMatrixError(TwoStepError):
    """A matrix that must be invertible is singular to working precision."""


class NonConvergenceError(TwoStepError):
    """An iterative eigenvalue routine exhausted its iteration budget."""


class MaxIterationsError(TwoStepError):
    """Coordinate descent hit its sweep cap before converging."""

    def __init__(self, message: str, lam: float | None = None):
        super().__init__(message)
        self.lam = lam


class ConstantColumnError(TwoStepError):
    """A design column has zero variance and cannot be standardized."""

    def __init__(self, column: int):
        super().__init__(f"column {column} is constant")
        self.column = column


class DegenerateGCVError(TwoStepError):
    """Every grid point has trace(H)/n >= 1, so the GCV score is undefined."""


class AllWeightsInfiniteError(TwoStepError):
    """The initial estimate is identically zero: every adaptive weight is infinite."""


class SpecMismatchError(TwoStepError):
    """A configuration is internally inconsistent."""
