"""Numeric kernel backend selection.

The env var SEMISIMP_NUMBA picks the backend for the whole process:

  unset / "auto"   use numba if it imports, else fall back to numpy
  "0" / "off"      force the pure-numpy path
  "1" / "on"       require numba (ImportError if unavailable)

All callers import ``K`` (the selected backend module); a process uses one
backend throughout, so results are reproducible run to run.
"""

from __future__ import annotations

import logging
import os

log = logging.getLogger("semisimp")

_FORCE_OFF = {"0", "off", "numpy", "false"}
_FORCE_ON = {"1", "on", "numba", "true"}


def _select():
    flag = os.environ.get("SEMISIMP_NUMBA", "auto").strip().lower()
    if flag in _FORCE_OFF:
        from . import numpy_backend
        return numpy_backend
    if flag in _FORCE_ON:
        from . import numba_backend
        return numba_backend
    try:
        from . import numba_backend
        return numba_backend
    except ImportError as exc:
        log.warning("numba unavailable (%s); using numpy kernels", exc)
        from . import numpy_backend
        return numpy_backend


K = _select()

REL_DET_EPS = K.REL_DET_EPS


def backend_name() -> str:
    return K.NAME


def get_backend(name: str):
    """Fetch a backend by name regardless of the env flag (benchmarks)."""
    if name == "numpy":
        from . import numpy_backend
        return numpy_backend
    if name == "numba":
        from . import numba_backend
        return numba_backend
    raise ValueError(f"unknown kernel backend: {name!r}")
