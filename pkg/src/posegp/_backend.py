"""Backend selection for the pairwise kernel loops.

The hot Gram-matrix loops have two interchangeable implementations:
numba-compiled parallel loops (default when numba is importable) and a
pure-numpy broadcasting fallback.  Set POSEGP_BACKEND=numpy or
POSEGP_BACKEND=numba to force one; values must agree within ~1e-13
(summation order differs, nothing else).
"""

from __future__ import annotations

import os

_ENV_VAR = "POSEGP_BACKEND"
_VALID = ("numba", "numpy")


def _resolve() -> str:
    requested = os.environ.get(_ENV_VAR, "").strip().lower()
    if requested:
        if requested not in _VALID:
            raise ValueError(
                f"{_ENV_VAR} must be one of {_VALID}, got {requested!r}"
            )
        if requested == "numba":
            import numba  # noqa: F401  fail loudly if forced but unavailable
        return requested
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


ACTIVE = _resolve()


def load_impl():
    if ACTIVE == "numba":
        from . import _pairwise_numba as impl
    else:
        from . import _pairwise_numpy as impl
    return impl
