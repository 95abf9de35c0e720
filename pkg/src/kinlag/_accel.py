"""Optional numba acceleration for the hot kernels.

Every kernel in the package is written once, in numba-compatible numpy, and
wrapped with :func:`optional_njit`.  Setting ``KINLAG_DISABLE_NUMBA=1`` in the
environment (before import) leaves the functions as plain Python so the
pure-numpy path can be exercised and benchmarked.
"""
import os

try:
    from numba import njit

    NUMBA_INSTALLED = True
except ImportError:  # pragma: no cover
    NUMBA_INSTALLED = False

USE_NUMBA = NUMBA_INSTALLED and os.environ.get("KINLAG_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


def optional_njit(*args, **kwargs):
    def decorator(func):
        if USE_NUMBA:
            return njit(*args, **kwargs)(func)
        return func

    return decorator


def backend():
    return "numba" if USE_NUMBA else "numpy"
