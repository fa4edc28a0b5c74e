# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: pattern log-likelihoods over many evaluation points.

Mirrors ``_pykernels``; both are exercised by the test suite against each
other.  Loops run without the GIL so callers can split rows across threads.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, INFINITY

cnp.import_array()

# nodes per tile: keeps the table slice touched by a block of rows in cache
DEF TILE = 512
# pattern rows per posterior block
DEF ROWS = 32


cdef inline void _add_row(double* out, const double* row, Py_ssize_t q) noexcept nogil:
    cdef Py_ssize_t r
    for r in range(q):
        out[r] += row[r]


cdef void _accumulate(const int[:, ::1] pat, const double[:, :, ::1] tab, Py_ssize_t i0,
                      Py_ssize_t i1, double* out) noexcept nogil:
    """Add the log-likelihood rows of patterns ``i0..i1`` into ``out`` (row-major, q wide)."""
    cdef Py_ssize_t m = pat.shape[1], q = tab.shape[2]
    cdef Py_ssize_t i, j, r0, width
    cdef int c
    for r0 in range(0, q, TILE):
        width = min(TILE, q - r0)
        for i in range(i0, i1):
            for j in range(m):
                c = pat[i, j]
                if c >= 0:
                    _add_row(out + (i - i0) * q + r0, &tab[j, c, r0], width)


def loglik_rows(patterns, log_table):
    cdef const int[:, ::1] pat = np.ascontiguousarray(patterns, dtype=np.int32)
    cdef const double[:, :, ::1] tab = np.ascontiguousarray(log_table, dtype=np.float64)
    cdef Py_ssize_t n = pat.shape[0], m = pat.shape[1], q = tab.shape[2]
    if tab.shape[0] != m:
        raise ValueError("pattern width does not match the probability table")
    out_arr = np.zeros((n, q))
    if n == 0 or q == 0:
        return out_arr
    cdef double[:, ::1] out = out_arr
    with nogil:
        _accumulate(pat, tab, 0, n, &out[0, 0])
    return out_arr


def posterior_moments(patterns, log_table, log_weights, values):
    cdef const int[:, ::1] pat = np.ascontiguousarray(patterns, dtype=np.int32)
    cdef const double[:, :, ::1] tab = np.ascontiguousarray(log_table, dtype=np.float64)
    cdef const double[::1] lw = np.ascontiguousarray(log_weights, dtype=np.float64)
    # node-major copy of the values so each posterior mean is a dot product
    cdef const double[:, ::1] val_t = np.ascontiguousarray(np.asarray(values, dtype=np.float64).T)
    cdef Py_ssize_t n = pat.shape[0], m = pat.shape[1], q = tab.shape[2]
    cdef Py_ssize_t nv = val_t.shape[0]
    if tab.shape[0] != m or lw.shape[0] != q or val_t.shape[1] != q:
        raise ValueError("inconsistent kernel argument shapes")
    lm_arr = np.empty(n)
    mean_arr = np.empty((n, nv))
    if n == 0 or q == 0:
        return lm_arr, mean_arr
    cdef double[::1] lm = lm_arr
    cdef double[:, ::1] means = mean_arr
    cdef double[:, ::1] buf = np.empty((ROWS, q))
    cdef double* ll
    cdef const double* vrow
    cdef Py_ssize_t i0, i1, i, r, v
    cdef double mx, total, acc
    with nogil:
        for i0 in range(0, n, ROWS):
            i1 = min(n, i0 + ROWS)
            for i in range(i1 - i0):
                for r in range(q):
                    buf[i, r] = lw[r]
            _accumulate(pat, tab, i0, i1, &buf[0, 0])
            for i in range(i0, i1):
                ll = &buf[i - i0, 0]
                mx = -INFINITY
                for r in range(q):
                    mx = ll[r] if ll[r] > mx else mx
                for r in range(q):
                    ll[r] = exp(ll[r] - mx)
                total = 0.0
                for r in range(q):
                    total += ll[r]
                lm[i] = mx + log(total)
                for v in range(nv):
                    vrow = &val_t[v, 0]
                    acc = 0.0
                    for r in range(q):
                        acc += ll[r] * vrow[r]
                    means[i, v] = acc / total
    return lm_arr, mean_arr
