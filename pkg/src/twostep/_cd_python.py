"""Pure-Python coordinate-descent inner loop, used when the compiled
extension is unavailable.  Must mirror _cd_kernel.pyx exactly."""

from __future__ import annotations

import numpy as np


def run_cd(x, r, beta, col_nrm2, penalty, active, nonneg, inv_n, tol, max_sweeps):
    """Cyclic coordinate descent on (1/2n)||y - X b||^2 + sum_j penalty_j * g(b_j).

    g is |b_j| when nonneg is false, and b_j restricted to b_j >= 0 when
    nonneg is true.  r must hold y - X @ beta on entry; r and beta are
    updated in place.  Only indices listed in active are touched.
    Returns (sweeps_run, last_max_change).
    """
    max_change = 0.0
    for sweep in range(max_sweeps):
        max_change = 0.0
        for j in active:
            nrm2 = col_nrm2[j]
            col = x[:, j]
            c1 = inv_n * float(col @ r) + nrm2 * beta[j]
            pen = penalty[j]
            if nonneg:
                b_new = (c1 - pen) / nrm2 if c1 > pen else 0.0
            else:
                if c1 > pen:
                    b_new = (c1 - pen) / nrm2
                elif c1 < -pen:
                    b_new = (c1 + pen) / nrm2
                else:
                    b_new = 0.0
            delta = b_new - beta[j]
            if delta != 0.0:
                r -= delta * col
                beta[j] = b_new
                if abs(delta) > max_change:
                    max_change = abs(delta)
        if max_change < tol:
            return sweep + 1, max_change
    return max_sweeps, max_change
