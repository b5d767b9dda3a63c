# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: per-axis split scans and exposure accumulation.

Must stay behaviourally identical to hazboost._kernels._pure; the pure
module is the reference implementation and the fallback at import time.
"""

import numpy as np


def scan_axis_splits(const long long[::1] codes, const double[::1] w,
                     const double[::1] wy, Py_ssize_t n_codes):
    """Best right-closed split position on one ordinal axis.

    Cells carry ordinal position ``codes`` on the axis, weights ``w`` and
    weighted targets ``wy``.  Splitting after position k sends codes <= k
    left; the gain is the weighted between-group decrease in squared error,
    W_l * W_r / W * (mean_l - mean_r)^2.  Returns ``(k, gain)`` for the best
    strictly positive gain, or ``(-1, 0.0)`` when no valid split exists.
    """
    cdef Py_ssize_t i, k, n = codes.shape[0]
    if n_codes < 2 or n == 0:
        return -1, 0.0
    gw_arr = np.zeros(n_codes, dtype=np.float64)
    gwy_arr = np.zeros(n_codes, dtype=np.float64)
    cdef double[::1] gw = gw_arr
    cdef double[::1] gwy = gwy_arr
    for i in range(n):
        gw[codes[i]] += w[i]
        gwy[codes[i]] += wy[i]
    cdef double tw = 0.0, twy = 0.0
    for k in range(n_codes):
        tw += gw[k]
        twy += gwy[k]
    if tw <= 0.0:
        return -1, 0.0
    cdef double lw = 0.0, lwy = 0.0, rw, rwy, dm, gain
    cdef double best = 0.0
    cdef Py_ssize_t best_k = -1
    for k in range(n_codes - 1):
        lw += gw[k]
        lwy += gwy[k]
        if lw <= 0.0:
            continue
        rw = tw - lw
        if rw <= 0.0:
            break
        rwy = twy - lwy
        dm = lwy / lw - rwy / rw
        gain = lw * rw / tw * dm * dm
        if gain > best:
            best = gain
            best_k = k
    return best_k, best


def accumulate_overlap(const double[::1] t0, const double[::1] t1,
                       const long long[::1] rows, const double[::1] edges,
                       double[:, ::1] out):
    """Add overlap lengths of intervals (t0, t1] with the time slabs given by
    ``edges`` into ``out[row, slab]``.  Exact, no quadrature."""
    cdef Py_ssize_t i, k, n = t0.shape[0], nslab = edges.shape[0] - 1
    cdef double a, b, lo, hi, ov
    for i in range(n):
        a = t0[i]
        b = t1[i]
        for k in range(nslab):
            lo = edges[k]
            if a > lo:
                lo = a
            hi = edges[k + 1]
            if b < hi:
                hi = b
            ov = hi - lo
            if ov > 0.0:
                out[rows[i], k] += ov
