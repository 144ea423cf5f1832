"""Optional numba acceleration.

``FLOWGAUNTLET_DISABLE_JIT=1`` forces the pure-numpy kernels even when numba
is importable. When numba is missing, ``njit`` degrades to a no-op decorator
so the loop kernels stay importable (and callable, slowly) for comparison.
"""

import os

_FLAG = os.environ.get("FLOWGAUNTLET_DISABLE_JIT", "").strip().lower()
JIT_REQUESTED = _FLAG not in ("1", "true", "yes", "on")

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is an optional extra
    _numba = None

HAVE_NUMBA = _numba is not None
USE_JIT = HAVE_NUMBA and JIT_REQUESTED


def njit(*args, **kwargs):
    if HAVE_NUMBA:
        return _numba.njit(*args, **kwargs)

    def wrapper(f):
        return f

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrapper
