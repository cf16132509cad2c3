# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled coordinate-descent inner loop.  Semantics must mirror
_cd_python.run_cd; see that module for the contract."""

import numpy as np

cimport numpy as cnp


def run_cd(double[::1, :] x, double[::1] r, double[::1] beta,
           double[::1] col_nrm2, double[::1] penalty,
           cnp.intp_t[::1] active, bint nonneg, double inv_n,
           double tol, Py_ssize_t max_sweeps):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_active = active.shape[0]
    cdef Py_ssize_t sweep, k, i, j
    cdef double c1, b_new, delta, adelta, max_change, pen, nrm2
    max_change = 0.0
    for sweep in range(max_sweeps):
        max_change = 0.0
        for k in range(n_active):
            j = active[k]
            nrm2 = col_nrm2[j]
            c1 = 0.0
            for i in range(n):
                c1 += x[i, j] * r[i]
            c1 = inv_n * c1 + nrm2 * beta[j]
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
                for i in range(n):
                    r[i] -= delta * x[i, j]
                beta[j] = b_new
                adelta = -delta if delta < 0.0 else delta
                if adelta > max_change:
                    max_change = adelta
        if max_change < tol:
            return sweep + 1, max_change
    return max_sweeps, max_change
