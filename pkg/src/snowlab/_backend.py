"""Kernel backend selection.

``SNOWLAB_NUMBA=0`` forces the pure-numpy kernels even when numba is
importable. ``SNOWLAB_THREADS`` caps the numba thread pool. Both are read
once, at import of :mod:`snowlab._kernels`.
"""
from __future__ import annotations

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional extra
    numba = None

_FALSY = {"0", "false", "no", "off"}


def numba_requested() -> bool:
    return os.environ.get("SNOWLAB_NUMBA", "1").strip().lower() not in _FALSY


HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and numba_requested()

if HAVE_NUMBA:
    prange = numba.prange
    # try OpenMP first; probing an outdated TBB only produces a warning
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]
else:  # pragma: no cover
    prange = range


def jit(fn=None, *, parallel: bool = False):
    """``numba.njit`` with on-disk caching, or the identity without numba."""
    def wrap(f):
        if not HAVE_NUMBA:
            return f
        return numba.njit(cache=True, parallel=parallel)(f)

    return wrap(fn) if fn is not None else wrap


def configure_threads(requested: int | None = None) -> int:
    """Apply ``SNOWLAB_THREADS`` (or ``requested``) to numba; return the count used.

    Kernels only parallelise over independent output slots, so results do not
    depend on the count.
    """
    if requested is None:
        raw = os.environ.get("SNOWLAB_THREADS")
        requested = int(raw) if raw else None
    if not HAVE_NUMBA:
        return 1
    limit = numba.config.NUMBA_NUM_THREADS
    n = limit if requested is None else max(1, min(int(requested), limit))
    numba.set_num_threads(n)
    return n


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
