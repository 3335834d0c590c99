"""Numerical backend selection.

The hot kernels (the log-likelihood reductions and the blockwise
coordinate-ascent regression solvers) exist twice: a numba implementation
with explicit loops compiled by ``@njit``, and a vectorized pure-numpy
fallback. The environment variable ``SHIFTLOGNMF_BACKEND`` selects one at
import time:

    SHIFTLOGNMF_BACKEND=numba    require numba; raise if it cannot be imported
    SHIFTLOGNMF_BACKEND=numpy    force the pure-numpy fallback
    unset or "auto"              numba when importable, numpy otherwise

Both implementations expose identical functions; ``_kernels_numpy`` carries
the reference semantics. ``benchmarks/bench_backends.py`` compares the two.
"""

from __future__ import annotations

import os

# Probe OpenMP before TBB for numba's parallel regions (explicit user
# settings win): old TBB installs fail the probe with a warning per process.
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp workqueue tbb")

_requested = os.environ.get("SHIFTLOGNMF_BACKEND", "auto").strip().lower() or "auto"

if _requested not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        "SHIFTLOGNMF_BACKEND must be 'numba', 'numpy', or 'auto', got %r" % _requested
    )

if _requested == "numpy":
    from . import _kernels_numpy as kernels

    BACKEND_NAME = "numpy"
elif _requested == "numba":
    from . import _kernels_numba as kernels

    BACKEND_NAME = "numba"
else:
    try:
        from . import _kernels_numba as kernels

        BACKEND_NAME = "numba"
    except ImportError:
        from . import _kernels_numpy as kernels

        BACKEND_NAME = "numpy"


def set_num_threads(n: int) -> None:
    """Cap the worker count used by parallel kernels.

    With the numpy backend the solves run single-threaded and this is a no-op
    (numpy's own BLAS threading is left alone).
    """
    if n < 1:
        raise ValueError("thread count must be >= 1")
    if BACKEND_NAME == "numba":
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
