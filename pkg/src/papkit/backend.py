"""Numba/NumPy backend selection for the hot kernels.

The compiled path is used whenever numba imports cleanly.  Setting the
environment variable ``PAPKIT_NO_NUMBA=1`` (before import) forces the pure
NumPy fallbacks instead; both paths compute identical results and are
compared in the test suite and in ``benchmarks/bench_kernels.py``.
"""

import os


def _flag_disabled():
    return os.environ.get("PAPKIT_NO_NUMBA", "").strip() in {"1", "true", "yes"}


_HAVE_NUMBA = False
if not _flag_disabled():
    try:
        from numba import njit as _njit  # noqa: F401

        _HAVE_NUMBA = True
    except Exception:  # pragma: no cover - exercised only without numba
        _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA


def backend_name():
    return "numba" if USE_NUMBA else "numpy"


def jit(func):
    """Compile ``func`` with numba when the compiled backend is active."""
    if USE_NUMBA:
        from numba import njit

        return njit(cache=True)(func)
    return func
