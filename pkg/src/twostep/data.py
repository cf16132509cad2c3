"""Datasets, ground-truth models, supports, and sign patterns.

Standardization convention used throughout: columns are mean-centered
and scaled so (1/n)||x_j||^2 = 1, the response is centered but not
scaled, and there is no intercept column.  The transform record kept on
the dataset lets coefficients be mapped back to the original scale, with
the intercept recovered from the centers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConstantColumnError

# Default cutoff for reading supports and signs off solver output.  It
# sits below the coordinate-descent convergence tolerance, so converged
# zeros are exact zeros.
DEFAULT_EPS = 1e-10


@dataclass(frozen=True)
class Standardization:
    """Per-column transform x_std = (x - x_center) * x_scale, y_std = y - y_center."""

    x_center: np.ndarray
    x_scale: np.ndarray
    y_center: float


@dataclass(frozen=True)
class Dataset:
    """A design matrix and response, optionally carrying the transform applied."""

    x: np.ndarray
    y: np.ndarray
    standardization: Standardization | None = None

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class TrueModel:
    """Ground truth for simulations: coefficients, support, and noise level."""

    beta_star: np.ndarray
    support: np.ndarray
    s: int
    sigma2: float
    rho_n: float


def make_dataset(x, y) -> Dataset:
    """Validate raw arrays and wrap them as an unstandardized Dataset."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError("design matrix must be at least 1x1")
    if y.shape[0] != x.shape[0]:
        raise ValueError(
            f"response length {y.shape[0]} does not match {x.shape[0]} design rows"
        )
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise ValueError("design or response contains NaN or Inf")
    return Dataset(x, y)


def make_true_model(beta_star, sigma2: float) -> TrueModel:
    """Build a TrueModel; the support is read off exact zeros of beta_star."""
    beta_star = np.asarray(beta_star, dtype=np.float64)
    if sigma2 <= 0.0:
        raise ValueError("sigma2 must be positive")
    support = np.flatnonzero(beta_star != 0.0)
    rho_n = float(np.min(np.abs(beta_star[support]))) if support.size else 0.0
    return TrueModel(beta_star, support, int(support.size), float(sigma2), rho_n)


def standardize(dataset: Dataset) -> Dataset:
    """Center and scale a dataset to the package convention.

    Applying this to an already-standardized dataset composes the
    transform records, so the operation is idempotent up to round-off.
    Raises ConstantColumnError for zero-variance columns.
    """
    x, y = dataset.x, dataset.y
    n = x.shape[0]
    center = x.mean(axis=0)
    shifted = x - center
    mean_sq = np.einsum("ij,ij->j", shifted, shifted) / n
    # A constant column whose mean is not exactly representable centers
    # to rounding residue instead of zeros, so the zero-variance check
    # must be relative to the column's raw magnitude.
    raw_sq = np.einsum("ij,ij->j", x, x) / n
    constant = (mean_sq == 0.0) | (mean_sq <= 1e-28 * raw_sq)
    for j in np.flatnonzero(constant):
        raise ConstantColumnError(int(j))
    scale = 1.0 / np.sqrt(mean_sq)
    y_center = float(y.mean())

    prior = dataset.standardization
    if prior is None:
        record = Standardization(center, scale, y_center)
    else:
        # x was already (x0 - c1) * s1; composing with (x - c2) * s2 gives
        # center c1 + c2/s1 and scale s1*s2 relative to the raw data.
        record = Standardization(
            prior.x_center + center / prior.x_scale,
            prior.x_scale * scale,
            prior.y_center + y_center,
        )
    return Dataset(shifted * scale, y - y_center, record)


def to_original_coords(record: Standardization, beta_std) -> tuple[np.ndarray, float]:
    """Map standardized coefficients back to the raw scale.

    Returns (beta_original, intercept) such that predictions
    intercept + X_raw @ beta_original equal y_center + X_std @ beta_std.
    """
    beta_std = np.asarray(beta_std, dtype=np.float64)
    beta_orig = beta_std * record.x_scale
    intercept = record.y_center - float(beta_orig @ record.x_center)
    return beta_orig, intercept


def support_of(beta, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Indices j with |beta_j| > eps, sorted ascending."""
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    return np.flatnonzero(np.abs(np.asarray(beta)) > eps)


def sign_pattern(beta, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Per-coordinate sign in {-1, 0, +1}, with |beta_j| <= eps mapped to 0."""
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    beta = np.asarray(beta, dtype=np.float64)
    out = np.sign(beta).astype(np.int64)
    out[np.abs(beta) <= eps] = 0
    return out


def _read_csv(path: str) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric value") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return [h.strip() for h in header], np.asarray(rows, dtype=np.float64)


def load_design_csv(path: str) -> tuple[np.ndarray, list[str]]:
    """Read a design matrix CSV (header row required, arbitrary column names)."""
    header, values = _read_csv(path)
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{path}: contains NaN or Inf")
    return values, header


def load_response_csv(path: str) -> np.ndarray:
    """Read a single-column response CSV (header row required)."""
    header, values = _read_csv(path)
    if len(header) != 1:
        raise ValueError(f"{path}: expected exactly one response column")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{path}: contains NaN or Inf")
    return values[:, 0]


def write_matrix_csv(path: str, matrix, names: list[str]) -> None:
    """Write a matrix as CSV with a header row, floats at 17 significant digits."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if matrix.shape[1] != len(names):
        raise ValueError("header length does not match column count")
    with open(path, "w", newline="") as handle:
        handle.write(",".join(names) + "\n")
        for row in matrix:
            handle.write(",".join("%.17g" % v for v in row) + "\n")
