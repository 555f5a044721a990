"""Switch between numba-compiled kernels and their pure-numpy twins.

Set ``GRIDFLOW_DISABLE_NUMBA=1`` to run the numpy path everywhere (useful
for debugging and for checking that both paths agree). Numba's own
``NUMBA_DISABLE_JIT=1`` is also honoured.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _flag(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = numba is not None and not (
    _flag("GRIDFLOW_DISABLE_NUMBA") or _flag("NUMBA_DISABLE_JIT")
)

_max_threads = os.environ.get("GRIDFLOW_MAX_THREADS")
if USE_NUMBA and _max_threads:
    try:
        numba.set_num_threads(max(1, min(int(_max_threads), numba.config.NUMBA_NUM_THREADS)))
    except ValueError:
        pass


def njit(func):
    """``numba.njit(cache=True)`` when available, else the function unchanged."""
    if numba is None:
        return func
    return numba.njit(cache=True)(func)


def pick(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl
