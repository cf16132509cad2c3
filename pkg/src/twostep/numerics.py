"""Dense symmetric linear algebra shared by every estimator.

Thin wrappers around LAPACK (through numpy) that pin down the exact
failure semantics the selectors rely on: singular systems raise instead
of being regularized, and numerical rank is decided by an explicit
tolerance relative to the largest eigenvalue.  Sign-recovery
certification depends on solving the caller's system as posed, so
``solve_spd`` never adds diagonal jitter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergenceError, SingularMatrixError

# Rank cutoff for spectral decompositions, relative to the top eigenvalue.
RANK_TOL = 1e-10

# A Cholesky pivot below this fraction of the largest diagonal entry
# means the system must be reported as singular.
PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigensystem of a symmetric PSD matrix.

    eigenvalues are sorted non-increasing, eigenvectors holds the matching
    orthonormal columns, and rank counts eigenvalues above
    ``rank_tol * eigenvalues[0]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int


def _require_symmetric(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError("expected a square matrix of dimension >= 1")
    scale = float(np.max(np.abs(a)))
    if scale > 0.0 and float(np.max(np.abs(a - a.T))) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric to within 1e-12 relative")
    return a


def solve_spd(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` for symmetric positive definite ``a``.

    The factorization is Cholesky; the elimination pivots are the squared
    diagonal of the factor.  If any pivot falls below
    ``PIVOT_TOL * max(diag(a))`` the system is reported as singular via
    SingularMatrixError.  ``b`` may be a vector or a matrix of right-hand
    sides.
    """
    a = _require_symmetric(a)
    b = np.asarray(b, dtype=np.float64)
    max_diag = float(np.max(np.diagonal(a)))
    if max_diag <= 0.0:
        raise SingularMatrixError("diagonal has no positive entry")
    try:
        factor = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    if float(np.min(np.diagonal(factor))) ** 2 < PIVOT_TOL * max_diag:
        raise SingularMatrixError(
            "pivot below 1e-12 of the largest diagonal entry"
        )
    return np.linalg.solve(a, b)


def eigh(a, rank_tol: float = RANK_TOL) -> SpectralDecomposition:
    """Spectral decomposition of a symmetric matrix, eigenvalues non-increasing.

    Intended for Gram matrices: eigenvalues that round off to small
    negatives (within ``rank_tol`` of zero relative to the top eigenvalue)
    are clipped to exact zero.  rank is the count of eigenvalues above
    ``rank_tol * eigenvalues[0]``.
    """
    a = _require_symmetric(a)
    try:
        values, vectors = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NonConvergenceError(str(exc)) from exc
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()
    top = float(values[0])
    if top > 0.0:
        values[(values < 0.0) & (values >= -rank_tol * top)] = 0.0
        rank = int(np.count_nonzero(values > rank_tol * top))
    else:
        rank = 0
    return SpectralDecomposition(values, vectors, rank)


def soft_threshold(z, t):
    """Shrink ``z`` toward zero by ``t``: sign(z) * max(0, |z| - t).

    Accepts scalars or arrays; ``t`` must be nonnegative.
    """
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
