# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: DP over unit contributions and line-search CDF sums.

Same contracts as ``_kernels_py``; selected by ``stumpcert.kernels`` when the
extension built.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport erf, sqrt

cnp.import_array()

KIND_GAUSSIAN = 0
KIND_UNIFORM = 1

cdef double SQRT1_2 = 1.0 / sqrt(2.0)


cdef inline double _cdf(double z, int kind, double scale) nogil:
    if kind == 1:  # uniform on [-scale, scale]
        z = (z + scale) / (2.0 * scale)
        if z < 0.0:
            return 0.0
        if z > 1.0:
            return 1.0
        return z
    return 0.5 * (1.0 + erf((z / scale) * SQRT1_2))


def dp_pdf(cnp.int64_t[::1] gammas, double[::1] probs, cnp.int64_t[::1] offsets):
    """Exact distribution of the summed unit contributions; see _kernels_py."""
    cdef Py_ssize_t n_units = offsets.shape[0] - 1
    cdef Py_ssize_t u, a, t, start
    cdef long long lo = 0, gmin, gmax, g
    cdef double p
    cdef cnp.ndarray[double, ndim=1] row = np.ones(1, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] new
    cdef double[::1] row_v, new_v

    for u in range(n_units):
        gmin = gammas[offsets[u]]
        gmax = gmin
        for a in range(offsets[u], offsets[u + 1]):
            g = gammas[a]
            if g < gmin:
                gmin = g
            if g > gmax:
                gmax = g
        new = np.zeros(row.shape[0] + (gmax - gmin), dtype=np.float64)
        row_v = row
        new_v = new
        with nogil:
            for a in range(offsets[u], offsets[u + 1]):
                p = probs[a]
                if p != 0.0:
                    start = <Py_ssize_t> (gammas[a] - gmin)
                    for t in range(row_v.shape[0]):
                        new_v[start + t] += p * row_v[t]
        row = new
        lo += gmin
    return int(lo), row


def dp_tail(cnp.int64_t[::1] gammas, double[::1] probs, cnp.int64_t[::1] offsets,
            long long thr):
    """P[total <= thr]; windows above thr are dropped (contributions are >= 0)."""
    cdef Py_ssize_t n_units = offsets.shape[0] - 1
    cdef Py_ssize_t u, a, t, start, keep, width
    cdef long long lo = 0, new_lo, gmin, gmax, g
    cdef double p, acc
    cdef cnp.ndarray[double, ndim=1] row = np.ones(1, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] new
    cdef double[::1] row_v, new_v

    if thr < 0:
        return 0.0
    for u in range(n_units):
        gmin = gammas[offsets[u]]
        gmax = gmin
        for a in range(offsets[u], offsets[u + 1]):
            g = gammas[a]
            if g < gmin:
                gmin = g
            if g > gmax:
                gmax = g
        new_lo = lo + gmin
        if new_lo > thr:
            return 0.0
        width = <Py_ssize_t> (min(lo + row.shape[0] - 1 + gmax, thr) - new_lo + 1)
        new = np.zeros(width, dtype=np.float64)
        row_v = row
        new_v = new
        with nogil:
            for a in range(offsets[u], offsets[u + 1]):
                p = probs[a]
                if p != 0.0:
                    start = <Py_ssize_t> (gammas[a] - gmin)
                    keep = row_v.shape[0]
                    if keep > width - start:
                        keep = width - start
                    for t in range(keep):
                        new_v[start + t] += p * row_v[t]
        row = new
        lo = new_lo
    acc = 0.0
    row_v = row
    for t in range(row_v.shape[0]):
        acc += row_v[t]
    return acc


def cdf_weighted_sums(double[::1] x, double[:, ::1] weights, double[::1] grid,
                      int kind, double scale):
    """S[k, g] = sum_i weights[i, k] * CDF(grid[g] - x[i]); see _kernels_py."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_w = weights.shape[1]
    cdef Py_ssize_t n_g = grid.shape[0]
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((n_w, n_g), dtype=np.float64)
    cdef double[:, ::1] out_v = out
    cdef Py_ssize_t i, g, k
    cdef double c
    with nogil:
        for i in range(n):
            for g in range(n_g):
                c = _cdf(grid[g] - x[i], kind, scale)
                for k in range(n_w):
                    out_v[k, g] += weights[i, k] * c
    return out
