"""Numba switch for the hot numeric kernels.

Kernels are written in a restricted, scalar-loop style that runs unchanged as
plain Python/NumPy.  Setting ``OBSLAB_NUMBA=0`` in the environment (before the
package is imported) turns the decorator into a no-op so the pure fallback path
is exercised instead of the compiled one.
"""
import os

_flag = os.environ.get("OBSLAB_NUMBA", "1").strip().lower()
_wanted = _flag not in ("0", "false", "no", "off")

try:
    if not _wanted:
        raise ImportError("numba disabled by OBSLAB_NUMBA")
    from numba import njit as _njit

    NUMBA_ENABLED = True
except ImportError:
    _njit = None
    NUMBA_ENABLED = False


def kernel(fn):
    """Compile ``fn`` with numba when enabled, otherwise return it untouched."""
    if NUMBA_ENABLED:
        return _njit(cache=True)(fn)
    return fn


def backend_name():
    return "numba" if NUMBA_ENABLED else "python"
