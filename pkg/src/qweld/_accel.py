"""Numba switch.

Set ``QWELD_NUMBA=0`` before import to force the pure-numpy kernels.  When
numba is missing the numpy path is used regardless of the flag.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("QWELD_NUMBA", "1").strip().lower() not in (
    "0",
    "false",
    "no",
    "off",
)


def njit(fn):
    """``numba.njit(cache=True, nogil=True)`` when available, identity otherwise."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
