"""Kernel selection: compiled Cython module if importable, numpy otherwise.

Set ``QSEMBED_PURE=1`` to force the fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if not os.environ.get("QSEMBED_PURE"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _kernels_py


def position_mask(level, positions):
    """uint8 mask of length ``level + 1`` with mask[p] = 1 for p in positions."""
    mask = np.zeros(level + 2, dtype=np.uint8)
    for p in positions:
        if 1 <= p <= level:
            mask[p] = 1
    return mask


def ones_profile(level, positions, backend=None):
    impl = _select(backend)
    return impl.ones_profile(level, position_mask(level, positions))


def ones_histogram(level, positions, backend=None):
    impl = _select(backend)
    return impl.ones_histogram(level, position_mask(level, positions))


def adjacent_extremes(profile, backend=None):
    impl = _select(backend)
    return impl.adjacent_extremes(np.ascontiguousarray(profile, dtype=np.int32))


def _select(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {backend!r}")
