"""First-stage coefficient estimators: OLS, univariate (marginal)
regression, Ridge with GCV-selected penalty, and the Lasso path.

Every estimator works on a Dataset that has already been standardized to
the package convention; the univariate estimator in particular is only
meaningful there, where (1/n) X'y is the vector of marginal regression
slopes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, sign_pattern, support_of
from .descent import CDWorkspace
from .errors import DegenerateGCVError, MaxIterationsError, SingularMatrixError
from .numerics import eigh, solve_spd

INITIAL_KINDS = ("ols", "univariate", "ridge", "lasso")

# Default tuning grids: 100 log-spaced lambdas spanning three decades
# below lambda_max, and 50 log-spaced nus in [1e-4, 1e2].
LAMBDA_GRID_SIZE = 100
LAMBDA_MIN_RATIO = 1e-3
NU_GRID = np.logspace(-4.0, 2.0, 50)


@dataclass(frozen=True)
class InitialEstimate:
    """A first-stage coefficient vector plus how it was obtained."""

    beta: np.ndarray
    method: str
    tuning: float | None = None
    diagnostics: dict | None = None


@dataclass(frozen=True)
class PathSolution:
    """Solutions along a strictly descending positive penalty grid."""

    lambdas: np.ndarray
    coefficients: np.ndarray
    supports: list = field(repr=False)
    signs: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.lambdas.shape[0]


def make_path(lambdas, coefficients) -> PathSolution:
    lambdas = np.asarray(lambdas, dtype=np.float64)
    coefficients = np.asarray(coefficients, dtype=np.float64)
    supports = [support_of(row) for row in coefficients]
    signs = np.stack([sign_pattern(row) for row in coefficients])
    return PathSolution(lambdas, coefficients, supports, signs)


def check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("grid must be a nonempty vector")
    if np.any(grid <= 0.0) or np.any(np.diff(grid) >= 0.0):
        raise ValueError("grid must be strictly descending and positive")
    return grid


def default_lambda_grid(
    lam_max: float, size: int = LAMBDA_GRID_SIZE, min_ratio: float = LAMBDA_MIN_RATIO
) -> np.ndarray:
    """Log-spaced grid from lam_max down to min_ratio * lam_max."""
    if lam_max <= 0.0:
        # Degenerate problems (e.g. y = 0) solve to zero at any penalty.
        lam_max = 1.0
    if size < 2:
        return np.asarray([lam_max])
    return np.geomspace(lam_max, min_ratio * lam_max, size)


def gram_and_moment(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    x, y = dataset.x, dataset.y
    n = x.shape[0]
    return (x.T @ x) / n, (x.T @ y) / n


def fit_ols(dataset: Dataset) -> InitialEstimate:
    """Ordinary least squares.  Requires p <= n and a nonsingular Gram."""
    if dataset.p > dataset.n:
        raise SingularMatrixError(
            f"OLS undefined for p={dataset.p} > n={dataset.n}"
        )
    gram, moment = gram_and_moment(dataset)
    beta = solve_spd(gram, moment)
    return InitialEstimate(beta, "ols")


def fit_univariate(dataset: Dataset) -> InitialEstimate:
    """Marginal regression slopes (1/n) x_j'y, one coordinate at a time."""
    _, moment = gram_and_moment(dataset)
    return InitialEstimate(moment, "univariate")


def fit_ridge(dataset: Dataset, nu: float) -> InitialEstimate:
    """Ridge solution ((1/n)X'X + nu I)^{-1} (1/n)X'y for nu > 0."""
    if nu <= 0.0:
        raise ValueError("nu must be positive")
    gram, moment = gram_and_moment(dataset)
    gram[np.diag_indices_from(gram)] += nu
    beta = solve_spd(gram, moment)
    return InitialEstimate(beta, "ridge", tuning=float(nu))


def select_ridge_gcv(dataset: Dataset, grid=None) -> tuple[float, InitialEstimate]:
    """Pick nu on the grid by generalized cross-validation.

    GCV(nu) = (1/n)||y - X beta(nu)||^2 / (1 - trace(H(nu))/n)^2 with
    H(nu) = X(X'X + n nu I)^{-1}X'.  Evaluated in closed form through one
    eigendecomposition of the Gram matrix.  Ties break toward larger nu;
    grid points with trace(H)/n >= 1 are skipped, and if that exhausts
    the grid the search fails with DegenerateGCVError.
    """
    if grid is None:
        grid = NU_GRID
    grid = np.sort(np.asarray(grid, dtype=np.float64))
    if grid.size < 1 or grid[0] <= 0.0:
        raise ValueError("nu grid must be nonempty and positive")
    x, y = dataset.x, dataset.y
    n = x.shape[0]
    gram, moment = gram_and_moment(dataset)
    decomp = eigh(gram)
    d = decomp.eigenvalues
    c = decomp.eigenvectors.T @ moment
    y_sq = float(y @ y)

    best_nu, best_score = None, np.inf
    for nu in grid:
        shrink = d + nu
        trace_h = float(np.sum(d / shrink))
        edge = 1.0 - trace_h / n
        if edge <= 0.0:
            continue
        rss = y_sq - 2.0 * n * float(np.sum(c * c / shrink)) + n * float(
            np.sum(d * c * c / (shrink * shrink))
        )
        score = max(rss, 0.0) / n / (edge * edge)
        if score <= best_score:
            best_nu, best_score = float(nu), score
    if best_nu is None:
        raise DegenerateGCVError("trace(H)/n >= 1 at every grid point")
    beta = decomp.eigenvectors @ (c / (d + best_nu))
    estimate = InitialEstimate(
        beta, "ridge", tuning=best_nu, diagnostics={"gcv": best_score}
    )
    return best_nu, estimate


def lasso_lambda_max(dataset: Dataset) -> float:
    """Smallest penalty at which the Lasso solution is identically zero."""
    _, moment = gram_and_moment(dataset)
    return float(np.max(np.abs(moment))) if moment.size else 0.0


def lasso_path(dataset: Dataset, grid=None) -> PathSolution:
    """Lasso solutions along a descending penalty grid, warm-started."""
    if grid is None:
        grid = default_lambda_grid(lasso_lambda_max(dataset))
    grid = check_grid(grid)
    work = CDWorkspace(dataset.x, dataset.y)
    coefs = np.empty((grid.size, dataset.p))
    penalty = np.empty(dataset.p)
    for i, lam in enumerate(grid):
        penalty.fill(lam)
        try:
            coefs[i] = work.solve(penalty, nonneg=False)
        except MaxIterationsError as exc:
            raise MaxIterationsError(str(exc), lam=float(lam)) from exc
    return make_path(grid, coefs)
