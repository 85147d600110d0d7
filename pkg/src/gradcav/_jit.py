"""Numba toggle.

Set ``GRADCAV_NUMBA=0`` to run every kernel as plain Python/numpy; this is
also what happens when numba cannot be imported.
"""
import os
import warnings

USE_NUMBA = os.environ.get("GRADCAV_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

if USE_NUMBA:
    try:
        from numba import njit as _numba_njit
    except ImportError:  # pragma: no cover
        warnings.warn("numba could not be imported; falling back to uncompiled kernels")
        USE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise."""
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def decorator(func):
        return func

    return decorator


def backend():
    return "numba" if USE_NUMBA else "python"
