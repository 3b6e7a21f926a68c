"""Kernel backend selection.

Two interchangeable implementations of the geometry hot loops exist:

* ``numba_backend``: scalar loops compiled with ``numba.njit`` (default), and
* ``numpy_backend``: a pure-numpy vectorized fallback.

The ``SYNTHPOSE_BACKEND`` environment variable picks one: ``numba``,
``numpy``, or ``auto`` (default; numba when importable, numpy otherwise).
Both backends compute identical bits: the fallback mirrors the scalar
arithmetic expression for expression, so outputs do not depend on the
backend.  ``benchmarks/bench_kernels.py`` compares their throughput.
"""

import os


def _load(name: str):
    if name == "numpy":
        from synthpose.kernels import numpy_backend as mod
    elif name == "numba":
        from synthpose.kernels import numba_backend as mod
    else:
        raise ValueError(
            f"SYNTHPOSE_BACKEND must be 'numba', 'numpy', or 'auto', got {name!r}"
        )
    return mod


_requested = os.environ.get("SYNTHPOSE_BACKEND", "auto").strip().lower() or "auto"
if _requested == "auto":
    try:
        _mod = _load("numba")
        BACKEND = "numba"
    except ImportError:
        _mod = _load("numpy")
        BACKEND = "numpy"
else:
    _mod = _load(_requested)
    BACKEND = _requested

segment_blocked = _mod.segment_blocked
capsule_union_extents = _mod.capsule_union_extents
