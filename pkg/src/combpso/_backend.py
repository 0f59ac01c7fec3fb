"""Kernel backend selection.

Hot loops (tree growth, split search, prediction) are written once in the
numba-compatible subset of Python. With ``COMBPSO_BACKEND=numpy`` (or when
numba is missing) they run uncompiled and the split search switches to a
vectorized NumPy implementation. Both paths produce bit-identical forests.
"""

from __future__ import annotations

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional
    numba = None

BACKEND = os.environ.get("COMBPSO_BACKEND", "numba").strip().lower()
if BACKEND not in ("numba", "numpy"):
    raise ValueError(f"COMBPSO_BACKEND must be 'numba' or 'numpy', got {BACKEND!r}")
USE_NUMBA = BACKEND == "numba" and numba is not None


def jit(fn):
    """``numba.njit(cache=True)`` when the numba backend is active, else identity."""
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
