"""Kernel dispatch between numba-compiled loops and plain numpy.

Set ``SEEDABSA_DISABLE_NUMBA=1`` to force the numpy path (useful for
debugging and for the kernel benchmark).  If numba cannot be imported the
numpy path is used automatically.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_DISABLED = os.environ.get("SEEDABSA_DISABLE_NUMBA", "").strip().lower() in (
    "1", "true", "yes", "on")

HAVE_NUMBA = numba is not None
prange = numba.prange if HAVE_NUMBA else range
USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(fn=None, **options):
    """``numba.njit`` when numba is importable, identity otherwise.

    Compilation is lazy, so decorating is cheap even when the numpy path is
    selected.
    """
    options.setdefault("cache", True)

    def wrap(f):
        if numba is None:
            return f
        return numba.njit(**options)(f)

    if fn is None:
        return wrap
    return wrap(fn)


def backend():
    return "numba" if USE_NUMBA else "numpy"


def pick(use_numba=None):
    """Resolve an explicit per-call override against the global flag."""
    if use_numba is None:
        return USE_NUMBA
    if use_numba and not HAVE_NUMBA:
        raise RuntimeError("numba requested but not installed")
    return bool(use_numba)
