"""Backend selection for the compiled kernels.

Set ``CAUSAL_MCMC_NUMBA=0`` to force the pure-numpy path. When numba is not
importable the numpy path is used regardless of the flag.
"""
import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_FLAG = os.environ.get("CAUSAL_MCMC_NUMBA", "1").strip().lower()
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("0", "false", "no", "off")


def njit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
