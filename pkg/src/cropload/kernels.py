"""Kernel dispatch: numba-jitted hot loops with a pure-Python fallback.

Every hot kernel in this package is written as a plain loop-style function
over numpy arrays.  When JIT is enabled (the default, and numba is
importable) the function is compiled with ``@njit(nogil=True, cache=True)``;
otherwise the same source runs under CPython.  Both paths therefore produce
bit-identical results; only speed differs.

Selection happens once at import time via the ``CROPLOAD_JIT`` environment
variable ("0"/"false"/"no" disables compilation).  ``kernel_modes`` keeps a
reference to both variants of every kernel so the two paths can be compared
directly (see ``bench.kernel_mode_bench`` and the parity tests).
"""

from __future__ import annotations

import os

_FALSY = ("0", "false", "no", "off")

JIT_ENABLED = os.environ.get("CROPLOAD_JIT", "1").lower() not in _FALSY

if JIT_ENABLED:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        numba = None
        JIT_ENABLED = False

# name -> (pure-python function, jitted function or None)
kernel_modes: dict[str, tuple] = {}


def kernel(func):
    """Register ``func`` as a hot kernel; returns the active variant."""
    jitted = None
    if JIT_ENABLED:
        jitted = numba.njit(nogil=True, cache=True)(func)
    kernel_modes[func.__name__] = (func, jitted)
    return jitted if JIT_ENABLED else func
