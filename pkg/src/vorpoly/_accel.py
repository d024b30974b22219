"""Numba switch.

Kernels are written once in the numba-compatible subset and decorated with
:func:`kernel`.  Setting ``VORPOLY_NUMBA=0`` in the environment (before import)
turns the decorator into a no-op so the very same code runs as plain
Python/numpy.  The un-jitted body of any kernel stays reachable through
:func:`pure` either way.
"""

import logging
import os

logger = logging.getLogger(__name__)

_flag = os.environ.get("VORPOLY_NUMBA", "1").strip().lower()
USE_NUMBA = _flag not in ("0", "false", "no", "off")

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        logger.warning("numba not importable, falling back to pure numpy kernels")
        USE_NUMBA = False

BACKEND = "numba" if USE_NUMBA else "numpy"


def kernel(fn=None, **options):
    """``numba.njit(cache=True)`` when enabled, identity otherwise."""
    def wrap(f):
        if not USE_NUMBA:
            return f
        options.setdefault("cache", True)
        return numba.njit(**options)(f)
    return wrap if fn is None else wrap(fn)


def pure(fn):
    """Return the Python body of a kernel regardless of the active backend."""
    return getattr(fn, "py_func", fn)
