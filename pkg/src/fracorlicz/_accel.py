"""Backend selection for the pairwise kernels.

Set ``FRACORLICZ_DISABLE_NUMBA=1`` before importing the package to force
the pure-numpy path. Without numba installed the numpy path is used
automatically.
"""

from __future__ import annotations

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None

HAVE_NUMBA = numba is not None
if HAVE_NUMBA and "NUMBA_THREADING_LAYER" not in os.environ:
    # skip the TBB probe, which warns on hosts with an old TBB
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
NUMBA_DISABLED = os.environ.get("FRACORLICZ_DISABLE_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
    "on",
}
USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED


def maybe_njit(parallel: bool = False):
    """Compile with ``numba.njit`` when numba is importable, else return the function."""

    def wrap(func):
        if not HAVE_NUMBA:
            return func
        return numba.njit(cache=True, parallel=parallel, fastmath=False)(func)

    return wrap


prange = numba.prange if HAVE_NUMBA else range
