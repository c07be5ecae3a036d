# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled enumeration kernels over all ternary cells of a level.

Every kernel walks the cells of level ``L`` in lexicographic order with a
ternary odometer.  Only the digit that stops the carry can change the count
of 1-digits at marked positions, so each step is O(1) amortised.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef Py_ssize_t _pow3(int level):
    cdef Py_ssize_t out = 1
    cdef int k
    for k in range(level):
        out *= 3
    return out


def ones_profile(int level, const unsigned char[:] mask):
    """Per-cell count of digits equal to 1 at marked positions."""
    cdef Py_ssize_t ncells = _pow3(level)
    out_arr = np.empty(ncells, dtype=np.int32)
    cdef int[:] out = out_arr
    cdef unsigned char[:] digits = np.zeros(level + 2, dtype=np.uint8)
    cdef Py_ssize_t i
    cdef int p, ones = 0
    if ncells == 0:
        return out_arr
    out[0] = 0
    for i in range(1, ncells):
        p = level
        while digits[p] == 2:
            digits[p] = 0
            p -= 1
        digits[p] += 1
        if mask[p]:
            if digits[p] == 1:
                ones += 1
            else:
                ones -= 1
        out[i] = ones
    return out_arr


def ones_histogram(int level, const unsigned char[:] mask):
    """Number of level cells per count of marked 1-digits (no storage)."""
    cdef int marked = 0
    cdef int p
    for p in range(1, level + 1):
        if mask[p]:
            marked += 1
    hist_arr = np.zeros(marked + 1, dtype=np.int64)
    cdef long long[:] hist = hist_arr
    cdef Py_ssize_t ncells = _pow3(level)
    cdef unsigned char[:] digits = np.zeros(level + 2, dtype=np.uint8)
    cdef Py_ssize_t i
    cdef int ones = 0
    hist[0] = 1
    for i in range(1, ncells):
        p = level
        while digits[p] == 2:
            digits[p] = 0
            p -= 1
        digits[p] += 1
        if mask[p]:
            if digits[p] == 1:
                ones += 1
            else:
                ones -= 1
        hist[ones] += 1
    return hist_arr


def adjacent_extremes(const int[:] profile):
    """Largest rise and largest drop of the profile between right neighbours.

    The last cell is compared with the first one (1-periodic extension).
    """
    cdef Py_ssize_t n = profile.shape[0]
    cdef Py_ssize_t i
    cdef int diff, rise = 0, drop = 0
    if n == 0:
        return 0, 0
    for i in range(n):
        if i + 1 < n:
            diff = profile[i + 1] - profile[i]
        else:
            diff = profile[0] - profile[i]
        if diff > rise:
            rise = diff
        if -diff > drop:
            drop = -diff
    return rise, drop
