"""Numpy fallback for the enumeration kernels in ``_kernels.pyx``.

Same signatures and results; used when the compiled module is unavailable.
"""
import numpy as np


def ones_profile(level, mask):
    prof = np.zeros(1, dtype=np.int32)
    for p in range(1, level + 1):
        step = np.array([0, 1 if mask[p] else 0, 0], dtype=np.int32)
        prof = (prof[:, None] + step[None, :]).ravel()
    return prof


def ones_histogram(level, mask):
    marked = int(sum(1 for p in range(1, level + 1) if mask[p]))
    prof = ones_profile(level, mask)
    return np.bincount(prof, minlength=marked + 1).astype(np.int64)


def adjacent_extremes(profile):
    profile = np.asarray(profile, dtype=np.int32)
    if profile.size == 0:
        return 0, 0
    diff = np.roll(profile, -1) - profile
    return int(max(diff.max(), 0)), int(max((-diff).max(), 0))
