"""Switch between numba-compiled kernels and the plain numpy/Python path.

Set ``HSLAB_DISABLE_NUMBA=1`` (or numba's own ``NUMBA_DISABLE_JIT=1``) before
importing :mod:`hslab` to run every kernel through its fallback.
"""

import os

_FALSY = ("", "0", "false", "no", "off")


def _flag(name):
    return os.environ.get(name, "0").strip().lower() not in _FALSY


try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and not (_flag("HSLAB_DISABLE_NUMBA") or _flag("NUMBA_DISABLE_JIT"))

NUMBA_OPTS = {"cache": True, "nogil": True}


def maybe_njit(fn):
    """Compile ``fn`` in nopython mode when numba is enabled, else return it unchanged."""
    if USE_NUMBA:
        return numba.njit(**NUMBA_OPTS)(fn)
    return fn
