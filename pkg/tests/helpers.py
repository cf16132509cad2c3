"""Shared fixtures: random problem instances and special designs."""

from dataclasses import dataclass

import numpy as np

from twostep import Dataset, make_dataset, standardize


def orthonormal_design(n, p, rng):
    """Columns with exactly zero mean and (1/n) X'X = I."""
    if n < p + 1:
        raise ValueError("need n >= p + 1")
    a = rng.standard_normal((n, p + 1))
    a[:, 0] = 1.0
    q = np.linalg.qr(a)[0]
    return q[:, 1:] * np.sqrt(n)


def ar_design(n, p, rho, rng):
    idx = np.arange(p)
    sigma = rho ** np.abs(idx[:, None] - idx[None, :])
    chol = np.linalg.cholesky(sigma + 1e-12 * np.eye(p))
    return rng.standard_normal((n, p)) @ chol.T


@dataclass(frozen=True)
class Instance:
    """A standardized problem with its exact standardized-coordinate truth.

    y_std = X_std beta_std + noise holds to machine precision, where
    noise is the centered raw noise; beta_std keeps the raw signs.
    """

    ds: Dataset
    beta_std: np.ndarray
    support: np.ndarray
    noise: np.ndarray
    sigma: float


def random_instance(idx, seed_tag=9100, p_range=(2, 7), n_range=None):
    """Seeded random sparse-regression instance (small, correlated)."""
    rng = np.random.default_rng([seed_tag, idx])
    p = int(rng.integers(*p_range))
    lo, hi = n_range if n_range else (p + 4, 31)
    n = int(rng.integers(lo, hi))
    rho = float(rng.uniform(-0.6, 0.9))
    x = ar_design(n, p, rho, rng)
    s = int(rng.integers(1, p))
    support = np.sort(rng.choice(p, size=s, replace=False))
    beta = np.zeros(p)
    beta[support] = (rng.integers(0, 2, size=s) * 2 - 1) * rng.uniform(0.5, 3.0, s)
    sigma = float(rng.uniform(0.05, 0.8))
    eps = sigma * rng.standard_normal(n)
    y = x @ beta + eps
    ds = standardize(make_dataset(x, y))
    beta_std = beta / ds.standardization.x_scale
    return Instance(ds, beta_std, support, eps - eps.mean(), sigma)


def planted_dataset(n, p, beta, sigma, seed, rho=0.0):
    """Raw-coordinate dataset with planted coefficients and N(0, s^2) noise."""
    rng = np.random.default_rng(seed)
    x = ar_design(n, p, rho, rng) if rho else rng.standard_normal((n, p))
    y = x @ np.asarray(beta, dtype=np.float64) + sigma * rng.standard_normal(n)
    return make_dataset(x, y)
