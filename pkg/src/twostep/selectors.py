"""Second-stage selectors: nonnegative Garrote, adaptive Lasso, and
hard-thresholding, applied to a first-stage estimate, with full path
computation and penalty selection by cross-validation or (in simulation)
by oracle search over the path.

Initial coefficients smaller than ZERO_INIT in magnitude are excluded
from the second stage: the Garrote freezes their shrinkage factor at
zero and the adaptive Lasso treats their weight as infinite, matching
the limit behavior of the weighted objectives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .descent import CDWorkspace
from .errors import AllWeightsInfiniteError, MaxIterationsError
from .initial import (
    InitialEstimate,
    PathSolution,
    check_grid,
    default_lambda_grid,
    fit_ols,
    fit_univariate,
    lasso_lambda_max,
    lasso_path,
    make_path,
    select_ridge_gcv,
)

ZERO_INIT = 1e-12

SELECTOR_KINDS = ("lasso", "garrote", "alasso", "ht")


@dataclass(frozen=True)
class MethodSpec:
    """A (second-step, initial-estimator) pair; plain Lasso has no initial."""

    selector: str
    initial: str | None = None
    gamma: float = 1.0

    def __post_init__(self):
        if self.selector not in SELECTOR_KINDS:
            raise ValueError(f"unknown selector {self.selector!r}")
        if self.selector == "lasso":
            if self.initial is not None:
                raise ValueError("plain lasso takes no initial estimator")
        elif self.initial not in ("ols", "univariate", "ridge", "lasso", "user"):
            # "user" marks an externally supplied coefficient vector; it
            # cannot be refit, so CV-style tuning rejects it upstream.
            raise ValueError(f"unknown initial estimator {self.initial!r}")
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")

    @property
    def label(self) -> str:
        if self.selector == "lasso":
            return "lasso"
        return f"{self.selector}-{self.initial}"


def parse_method(label: str) -> MethodSpec:
    """Parse labels like "lasso", "alasso-ridge", "ht-univariate"."""
    parts = label.strip().lower().split("-")
    if parts == ["lasso"]:
        return MethodSpec("lasso")
    if len(parts) != 2:
        raise ValueError(f"cannot parse method label {label!r}")
    return MethodSpec(parts[0], parts[1])


@dataclass(frozen=True)
class GarroteSolution:
    """Nonnegative shrinkage factors and the rescaled coefficients."""

    d: np.ndarray
    beta_ng: np.ndarray
    lam: float


def _active_indices(init_beta: np.ndarray) -> np.ndarray:
    return np.flatnonzero(np.abs(init_beta) >= ZERO_INIT)


def garrote_lambda_max(dataset: Dataset, init_beta) -> float:
    """Smallest penalty at which every Garrote shrinkage factor is zero."""
    z_moment = (dataset.x.T @ dataset.y) / dataset.n * np.asarray(init_beta)
    return float(max(np.max(z_moment, initial=0.0), 0.0))


def alasso_lambda_max(dataset: Dataset, init_beta, gamma: float = 1.0) -> float:
    """Smallest penalty at which the adaptive Lasso solution is zero."""
    init_beta = np.asarray(init_beta)
    moment = (dataset.x.T @ dataset.y) / dataset.n
    active = _active_indices(init_beta)
    if active.size == 0:
        raise AllWeightsInfiniteError("initial estimate is identically zero")
    vals = np.abs(init_beta[active]) ** gamma * np.abs(moment[active])
    return float(np.max(vals))


def ht_grid(init_beta) -> np.ndarray:
    """Thresholds that walk the hard-threshold path from empty to full.

    Distinct values of |init_beta| (each kept at equality), preceded by a
    point just above the largest so the path starts at the zero vector,
    and followed by a just-above-zero point.
    """
    vals = np.unique(np.abs(np.asarray(init_beta, dtype=np.float64)))
    vals = vals[vals > 0.0][::-1]
    if vals.size == 0:
        return np.asarray([1.0])
    return np.concatenate(
        ([np.nextafter(vals[0], np.inf)], vals, [np.nextafter(0.0, 1.0)])
    )


def _garrote_workspace(dataset: Dataset, init_beta) -> CDWorkspace:
    z = dataset.x * init_beta
    return CDWorkspace(z, dataset.y, active=_active_indices(init_beta))


def _run_garrote(work: CDWorkspace, init_beta, lam: float) -> tuple[np.ndarray, np.ndarray]:
    penalty = np.full(work.p, float(lam))
    try:
        d = work.solve(penalty, nonneg=True)
    except MaxIterationsError as exc:
        raise MaxIterationsError(str(exc), lam=float(lam)) from exc
    return d, init_beta * d


def garrote_fit(dataset: Dataset, init: InitialEstimate, lam: float) -> GarroteSolution:
    """Minimize (1/2n)||y - Z d||^2 + lam * sum(d) over d >= 0, Z = X diag(init)."""
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    work = _garrote_workspace(dataset, init.beta)
    d, beta_ng = _run_garrote(work, init.beta, lam)
    return GarroteSolution(d, beta_ng, float(lam))


def garrote_path(dataset: Dataset, init: InitialEstimate, grid=None) -> PathSolution:
    """Garrote solutions along a descending grid, warm-started."""
    if grid is None:
        grid = default_lambda_grid(garrote_lambda_max(dataset, init.beta))
    grid = check_grid(grid)
    work = _garrote_workspace(dataset, init.beta)
    coefs = np.empty((grid.size, dataset.p))
    for i, lam in enumerate(grid):
        _, coefs[i] = _run_garrote(work, init.beta, lam)
    return make_path(grid, coefs)


def _alasso_penalty(init_beta, lam: float, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    active = _active_indices(init_beta)
    if active.size == 0:
        raise AllWeightsInfiniteError("initial estimate is identically zero")
    penalty = np.zeros(init_beta.shape[0])
    penalty[active] = lam * np.abs(init_beta[active]) ** (-gamma)
    return penalty, active


def alasso_fit(
    dataset: Dataset, init: InitialEstimate, lam: float, gamma: float = 1.0
) -> np.ndarray:
    """Minimize (1/2n)||y - X b||^2 + lam * sum_j |init_j|^{-gamma} |b_j|."""
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    penalty, active = _alasso_penalty(np.asarray(init.beta), lam, gamma)
    work = CDWorkspace(dataset.x, dataset.y, active=active)
    try:
        return work.solve(penalty)
    except MaxIterationsError as exc:
        raise MaxIterationsError(str(exc), lam=float(lam)) from exc


def alasso_path(
    dataset: Dataset, init: InitialEstimate, grid=None, gamma: float = 1.0
) -> PathSolution:
    """Adaptive-Lasso solutions along a descending grid, warm-started."""
    init_beta = np.asarray(init.beta)
    if grid is None:
        grid = default_lambda_grid(alasso_lambda_max(dataset, init_beta, gamma))
    grid = check_grid(grid)
    _, active = _alasso_penalty(init_beta, 1.0, gamma)
    work = CDWorkspace(dataset.x, dataset.y, active=active)
    coefs = np.empty((grid.size, dataset.p))
    for i, lam in enumerate(grid):
        penalty, _ = _alasso_penalty(init_beta, float(lam), gamma)
        try:
            coefs[i] = work.solve(penalty)
        except MaxIterationsError as exc:
            raise MaxIterationsError(str(exc), lam=float(lam)) from exc
    return make_path(grid, coefs)


def hard_threshold(init: InitialEstimate, lam: float) -> np.ndarray:
    """Keep init_j when |init_j| >= lam (equality kept), else zero."""
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    beta = np.asarray(init.beta, dtype=np.float64)
    return np.where(np.abs(beta) >= lam, beta, 0.0)


def ht_path(init: InitialEstimate, grid=None) -> PathSolution:
    """Hard-threshold solutions along a descending grid."""
    if grid is None:
        grid = ht_grid(init.beta)
    grid = check_grid(grid)
    coefs = np.stack([hard_threshold(init, float(lam)) for lam in grid])
    return make_path(grid, coefs)


def fit_initial(dataset: Dataset, kind: str, seed=0, cv_folds: int = 5) -> InitialEstimate:
    """Fit one of the first-stage estimators, tuning where required.

    Ridge tunes nu by GCV; the Lasso tunes its penalty by k-fold
    cross-validation with the given seed.
    """
    if kind == "ols":
        return fit_ols(dataset)
    if kind == "univariate":
        return fit_univariate(dataset)
    if kind == "ridge":
        return select_ridge_gcv(dataset)[1]
    if kind == "lasso":
        lam, beta = select_lambda_cv(dataset, MethodSpec("lasso"), k=cv_folds, seed=seed)
        return InitialEstimate(beta, "lasso", tuning=float(lam))
    raise ValueError(f"unknown initial estimator {kind!r}")


def fit_path(
    dataset: Dataset,
    spec: MethodSpec,
    grid=None,
    init: InitialEstimate | None = None,
    seed=0,
    grid_size: int = 100,
    grid_min_ratio: float = 1e-3,
) -> tuple[PathSolution, InitialEstimate | None]:
    """Compute the full solution path for a method, fitting the initial
    estimator first when one is needed and not supplied."""
    if spec.selector == "lasso":
        if grid is None:
            grid = default_lambda_grid(
                lasso_lambda_max(dataset), grid_size, grid_min_ratio
            )
        return lasso_path(dataset, grid), None
    if init is None:
        init = fit_initial(dataset, spec.initial, seed=seed)
    if spec.selector == "garrote":
        if grid is None:
            grid = default_lambda_grid(
                garrote_lambda_max(dataset, init.beta), grid_size, grid_min_ratio
            )
        return garrote_path(dataset, init, grid), init
    if spec.selector == "alasso":
        if grid is None:
            grid = default_lambda_grid(
                alasso_lambda_max(dataset, init.beta, spec.gamma),
                grid_size,
                grid_min_ratio,
            )
        return alasso_path(dataset, init, grid, gamma=spec.gamma), init
    if spec.selector == "ht":
        return ht_path(init, grid), init
    raise ValueError(f"unknown selector {spec.selector!r}")


def fit_at(
    dataset: Dataset,
    spec: MethodSpec,
    lam: float,
    init: InitialEstimate | None = None,
    seed=0,
) -> tuple[np.ndarray, InitialEstimate | None]:
    """Fit one method at a single penalty, returning (beta, initial used)."""
    if spec.selector == "lasso":
        work = CDWorkspace(dataset.x, dataset.y)
        return work.solve(np.full(dataset.p, float(lam))), None
    if init is None:
        init = fit_initial(dataset, spec.initial, seed=seed)
    if spec.selector == "garrote":
        return garrote_fit(dataset, init, lam).beta_ng, init
    if spec.selector == "alasso":
        return alasso_fit(dataset, init, lam, gamma=spec.gamma), init
    return hard_threshold(init, lam), init


def objective_value(
    dataset: Dataset, spec: MethodSpec, lam: float, beta, init=None
) -> float:
    """Penalized objective of a candidate solution, in the fit coordinates.

    For the Garrote the penalty is evaluated on the shrinkage factors
    implied by beta; hard-thresholding reports the plain residual term.
    """
    beta = np.asarray(beta, dtype=np.float64)
    resid = dataset.y - dataset.x @ beta
    base = 0.5 * float(resid @ resid) / dataset.n
    if spec.selector == "ht":
        return base
    if spec.selector == "lasso":
        return base + lam * float(np.sum(np.abs(beta)))
    init_beta = np.asarray(init.beta, dtype=np.float64)
    active = _active_indices(init_beta)
    if spec.selector == "garrote":
        return base + lam * float(np.sum(beta[active] / init_beta[active]))
    weights = np.abs(init_beta[active]) ** (-spec.gamma)
    return base + lam * float(np.sum(weights * np.abs(beta[active])))


def kkt_residual(
    dataset: Dataset, spec: MethodSpec, lam: float, beta, init=None
) -> float:
    """Largest violation of the method's stationarity conditions at beta.

    Zero for hard-thresholding, which has no first-order system.
    """
    beta = np.asarray(beta, dtype=np.float64)
    x, y, n = dataset.x, dataset.y, dataset.n
    if spec.selector == "ht":
        return 0.0
    if spec.selector == "garrote":
        init_beta = np.asarray(init.beta, dtype=np.float64)
        active = _active_indices(init_beta)
        z = x[:, active] * init_beta[active]
        d = beta[active] / init_beta[active]
        grad = z.T @ (y - z @ d) / n
        on = d > 0.0
        worst = 0.0
        if np.any(on):
            worst = float(np.max(np.abs(grad[on] - lam)))
        if np.any(~on):
            worst = max(worst, float(np.max(grad[~on] - lam, initial=0.0)))
        return worst
    if spec.selector == "lasso":
        active = np.arange(dataset.p)
        weights = np.ones(dataset.p)
    else:
        init_beta = np.asarray(init.beta, dtype=np.float64)
        active = _active_indices(init_beta)
        weights = np.abs(init_beta[active]) ** (-spec.gamma)
    grad = x[:, active].T @ (y - x[:, active] @ beta[active]) / n
    on = beta[active] != 0.0
    worst = 0.0
    if np.any(on):
        worst = float(
            np.max(np.abs(grad[on] - lam * weights[on] * np.sign(beta[active][on])))
        )
    if np.any(~on):
        worst = max(
            worst, float(np.max(np.abs(grad[~on]) - lam * weights[~on], initial=0.0))
        )
    return worst


def _child_seed(seed, *tags) -> list:
    base = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    return base + [int(t) for t in tags]


def select_lambda_cv(
    dataset: Dataset,
    spec: MethodSpec,
    grid=None,
    k: int = 5,
    seed=0,
) -> tuple[float, np.ndarray]:
    """Pick the second-stage penalty by k-fold cross-validation.

    Folds are contiguous blocks of a seeded shuffle.  One common grid,
    derived from the full dataset, is scored across folds; each fold
    refits the entire pipeline (initial estimator included) on its
    training part.  The mean of per-fold validation MSEs is minimized,
    ties break toward the larger penalty, and the returned coefficients
    come from a final full-data fit at the winner.
    """
    n = dataset.n
    if k < 2 or k > n:
        raise ValueError("fold count must satisfy 2 <= k <= n")
    init_full = None
    if spec.selector != "lasso":
        init_full = fit_initial(dataset, spec.initial, seed=_child_seed(seed, 1))
    if grid is None:
        grid, _ = _default_grid_for(dataset, spec, init_full)
    grid = check_grid(grid)

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    mse = np.zeros(grid.size)
    for fold, val_idx in enumerate(np.array_split(order, k)):
        train_mask = np.ones(n, dtype=bool)
        train_mask[val_idx] = False
        train = Dataset(dataset.x[train_mask], dataset.y[train_mask])
        path, _ = fit_path(train, spec, grid=grid, seed=_child_seed(seed, 2, fold))
        preds = dataset.x[val_idx] @ path.coefficients.T
        mse += np.mean((dataset.y[val_idx, None] - preds) ** 2, axis=0)
    mse /= k

    lam_star = float(grid[int(np.argmin(mse))])
    beta, _ = fit_at(dataset, spec, lam_star, init=init_full, seed=seed)
    return lam_star, beta


def _default_grid_for(dataset, spec, init):
    if spec.selector == "lasso":
        return default_lambda_grid(lasso_lambda_max(dataset)), None
    if spec.selector == "garrote":
        return default_lambda_grid(garrote_lambda_max(dataset, init.beta)), init
    if spec.selector == "alasso":
        return (
            default_lambda_grid(alasso_lambda_max(dataset, init.beta, spec.gamma)),
            init,
        )
    return ht_grid(init.beta), init


def select_lambda_oracle(path: PathSolution, truth_signs) -> tuple[float | None, bool]:
    """Largest path penalty whose sign pattern equals the truth, if any.

    Only usable when the true signs are known, i.e. in simulation.
    """
    truth = np.asarray(truth_signs)
    for i in range(len(path)):
        if np.array_equal(path.signs[i], truth):
            return float(path.lambdas[i]), True
    return None, False
