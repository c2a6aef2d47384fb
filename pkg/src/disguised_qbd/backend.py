"""Kernel backend selection.

Hot loops are written once in the numba-compatible subset of numpy and
compiled with ``numba.njit`` when numba is importable.  Setting
``DISGUISED_QBD_BACKEND=numpy`` (read at import time) forces the plain
Python/numpy path, which is also what runs when numba is missing.

Every kernel exposes ``.py_func`` in both modes, so the benchmark can time
the two paths side by side in one process.
"""

import os

_requested = os.environ.get("DISGUISED_QBD_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(
        f"DISGUISED_QBD_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

try:
    if _requested == "numpy":
        raise ImportError
    import numba
except ImportError:
    numba = None

BACKEND = "numba" if numba is not None else "numpy"


def kernel(fn=None, *, nogil=True):
    """Decorator: compile with numba when enabled, else return ``fn`` as is."""

    def wrap(f):
        if numba is None:
            f.py_func = f
            return f
        return numba.njit(cache=True, nogil=nogil)(f)

    if fn is None:
        return wrap
    return wrap(fn)
