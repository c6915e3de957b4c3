"""Kernel backend selection.

The compiled Cython kernels are preferred when the extension built; the numpy
fallback is always available.  Set CVXADP_PURE=1 to force the fallback (used
by the benchmark script and the backend-equivalence tests).
"""

import os

from . import _pure

if os.environ.get("CVXADP_PURE") == "1":
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

OPTIMAL = _pure.OPTIMAL
UNBOUNDED = _pure.UNBOUNDED
BUDGET = _pure.BUDGET

simplex_chunk = _impl.simplex_chunk
max_affine_argmax = _impl.max_affine_argmax
hit_and_run_walk = _impl.hit_and_run_walk

__all__ = [
    "BACKEND",
    "OPTIMAL",
    "UNBOUNDED",
    "BUDGET",
    "simplex_chunk",
    "max_affine_argmax",
    "hit_and_run_walk",
    "get_backend",
]


def get_backend():
    """Name of the active kernel backend: "compiled" or "pure"."""
    return BACKEND
