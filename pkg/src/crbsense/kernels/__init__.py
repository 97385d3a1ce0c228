"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Backend selection, checked once at import:

    CRBSENSE_BACKEND=numba   require the numba backend (raise if unavailable)
    CRBSENSE_BACKEND=numpy   force the pure-numpy fallback
    unset / auto             numba if importable, numpy otherwise
"""

from __future__ import annotations

import os

from . import backend_numpy

_choice = os.environ.get("CRBSENSE_BACKEND", "auto").lower()

if _choice == "numpy":
    _impl = backend_numpy
    BACKEND = "numpy"
elif _choice in ("auto", "numba"):
    try:
        from . import backend_numba as _impl

        BACKEND = "numba"
    except ImportError:
        if _choice == "numba":
            raise
        _impl = backend_numpy
        BACKEND = "numpy"
else:
    raise ValueError(f"unknown CRBSENSE_BACKEND {_choice!r} (use numba, numpy, or auto)")

bus_injections = _impl.bus_injections
injection_jacobian = _impl.injection_jacobian
branch_flows = _impl.branch_flows
branch_flow_jacobian = _impl.branch_flow_jacobian

__all__ = [
    "BACKEND",
    "backend_numpy",
    "bus_injections",
    "injection_jacobian",
    "branch_flows",
    "branch_flow_jacobian",
]
