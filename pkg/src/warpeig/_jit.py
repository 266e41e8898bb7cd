"""Optional numba acceleration.

Set ``WARPEIG_DISABLE_NUMBA=1`` to run every kernel as plain Python/numpy.
The flag is read once at import time.
"""
import os

_disabled = os.environ.get("WARPEIG_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba

    USE_NUMBA = True
except ImportError:
    numba = None
    USE_NUMBA = False


def jit(func=None, *, cache=True):
    """Compile ``func`` with ``numba.njit`` when acceleration is enabled.

    Kernels that receive other kernels as arguments cannot be cached on disk
    and must pass ``cache=False``.
    """
    def wrap(f):
        if USE_NUMBA:
            return numba.njit(cache=cache, nogil=True)(f)
        return f

    return wrap(func) if func is not None else wrap
