"""Selects the numba or pure-numpy kernel path.

Set SCITECH_NUMBA=0 to force the numpy fallback; SCITECH_NUMBA=1 to require
numba (import error becomes fatal). Unset means: use numba when importable.
The choice is fixed at import time so a process never mixes paths.
"""

import os

_TRUTHY = {"1", "true", "on", "yes"}
_FALSY = {"0", "false", "off", "no"}


def _detect() -> bool:
    flag = os.environ.get("SCITECH_NUMBA", "").strip().lower()
    if flag in _FALSY:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        if flag in _TRUTHY:
            raise RuntimeError("SCITECH_NUMBA=1 but numba is not importable")
        return False
    return True


NUMBA_ENABLED = _detect()
