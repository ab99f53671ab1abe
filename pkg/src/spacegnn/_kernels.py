"""Edge-level scatter/gather kernels.

Message passing spends most of its time moving per-edge rows into per-node
rows and back. Each kernel has a numba ``@njit`` implementation and a pure
numpy one with identical semantics. The numba path is used when numba imports
and ``SPACEGNN_DISABLE_NUMBA`` is unset (or "0"); otherwise numpy is used.
"""

import os
from contextlib import contextmanager

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

HAVE_NUMBA = numba is not None
_flag = os.environ.get("SPACEGNN_DISABLE_NUMBA", "").strip().lower()
_use_numba = HAVE_NUMBA and _flag in ("", "0", "false", "no")


def njit(f):
    if numba is None:
        return f
    return numba.njit(cache=True, nogil=True)(f)


def backend():
    return "numba" if _use_numba else "numpy"


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"`` for subsequent kernel calls."""
    global _use_numba
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _use_numba = name == "numba"


@contextmanager
def using_backend(name):
    prev = backend()
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


# -- numba ------------------------------------------------------------------

@njit
def _segment_sum_nb(values, offsets):
    n = offsets.shape[0] - 1
    d = values.shape[1]
    out = np.zeros((n, d))
    for i in range(n):
        for e in range(offsets[i], offsets[i + 1]):
            for k in range(d):
                out[i, k] += values[e, k]
    return out


@njit
def _scatter_add_rows_nb(values, index, n):
    d = values.shape[1]
    out = np.zeros((n, d))
    for e in range(index.shape[0]):
        r = index[e]
        for k in range(d):
            out[r, k] += values[e, k]
    return out


# -- numpy ------------------------------------------------------------------

def _segment_sum_np(values, offsets):
    n = offsets.shape[0] - 1
    out = np.zeros((n, values.shape[1]))
    if values.shape[0] == 0:
        return out
    counts = np.diff(offsets)
    nonempty = counts > 0
    # reduceat misbehaves on empty segments, so only feed it non-empty starts
    sums = np.add.reduceat(values, offsets[:-1][nonempty], axis=0)
    out[nonempty] = sums
    return out


def _scatter_add_rows_np(values, index, n):
    out = np.zeros((n, values.shape[1]))
    np.add.at(out, index, values)
    return out


# -- dispatch ---------------------------------------------------------------

def segment_sum(values, offsets):
    """Sum consecutive row blocks: ``out[i] = values[offsets[i]:offsets[i+1]].sum(0)``."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    if _use_numba:
        return _segment_sum_nb(values, offsets)
    return _segment_sum_np(values, offsets)


def scatter_add_rows(values, index, n):
    """Accumulate ``values[e]`` into row ``index[e]`` of an ``n``-row zero matrix."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    index = np.ascontiguousarray(index, dtype=np.int64)
    if _use_numba:
        return _scatter_add_rows_nb(values, index, int(n))
    return _scatter_add_rows_np(values, index, int(n))
