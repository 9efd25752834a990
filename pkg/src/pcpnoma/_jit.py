"""Optional numba acceleration.

Hot kernels are written once as plain numpy/Python functions and decorated with
:func:`jit`.  When numba is importable and ``PCPNOMA_DISABLE_NUMBA`` is unset
they are compiled with ``numba.njit``; otherwise the undecorated functions run
as ordinary numpy code.  The flag is read once, at import time.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_disabled = os.environ.get("PCPNOMA_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")
USE_NUMBA = HAVE_NUMBA and not _disabled
BACKEND = "numba" if USE_NUMBA else "numpy"


def jit(func=None, **kwargs):
    """``numba.njit(cache=True, nogil=True)`` or the identity, per backend."""
    options = {"cache": True, "nogil": True}
    options.update(kwargs)

    def decorate(f):
        if USE_NUMBA:
            return numba.njit(**options)(f)
        return f

    if func is None:
        return decorate
    return decorate(func)
