"""Optional numba acceleration.

Set ABSENTMINDED_DISABLE_NUMBA=1 to force the pure-numpy kernels. When numba
is not importable the numpy kernels are used automatically.
"""
import os

_FLAG = "ABSENTMINDED_DISABLE_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def numba_enabled():
    if numba is None:
        return False
    return os.environ.get(_FLAG, "").strip().lower() not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """numba.njit when numba is importable, otherwise the identity decorator."""
    if numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)
