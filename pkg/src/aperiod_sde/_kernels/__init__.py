"""Kernel backend selection.

The compiled extension is preferred when present; the numpy fallback keeps
the package fully functional from a plain source checkout.  Set
``APERIOD_SDE_FORCE_FALLBACK=1`` to skip the compiled module (used by the
benchmark and the backend-parity tests).
"""

import os

if os.environ.get("APERIOD_SDE_FORCE_FALLBACK", "") == "1":
    from . import _reference as _impl
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _reference as _impl

BACKEND = _impl.BACKEND
gamma_pass = _impl.gamma_pass
integrate_pass = _impl.integrate_pass

__all__ = ["BACKEND", "gamma_pass", "integrate_pass"]
