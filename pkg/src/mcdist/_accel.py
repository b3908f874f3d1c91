"""JIT selection shared by every hot kernel.

Kernels are written once in a loop style that both numba and the plain
interpreter accept. Setting ``MCDIST_DISABLE_JIT=1`` (or running without
numba installed) keeps the undecorated functions, and the modules that own a
vectorised numpy alternative switch to it.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("MCDIST_DISABLE_JIT", "0") in ("", "0")


def jit(func):
    """Compile ``func`` in nopython mode when numba is enabled."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func


def python_impl(func):
    """Return the interpreted function behind a possibly compiled kernel."""
    return getattr(func, "py_func", func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
