"""Optional numba acceleration.

Set ``PELVE_LAB_DISABLE_JIT=1`` to force the pure-numpy code paths.
"""
import os

_FLAG = os.environ.get("PELVE_LAB_DISABLE_JIT", "").strip().lower()
JIT_REQUESTED = _FLAG not in ("1", "true", "yes", "on")

try:
    import numba as _numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    HAVE_NUMBA = False

JIT_ENABLED = JIT_REQUESTED and HAVE_NUMBA


def maybe_njit(func):
    """Compile ``func`` with numba if available, else return it unchanged."""
    if HAVE_NUMBA:
        return _numba.njit(cache=True)(func)
    return func
