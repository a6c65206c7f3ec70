"""Kernel dispatch: the compiled extension when available, NumPy otherwise.

Set ``CRPLAP_PURE_PYTHON=1`` to force the NumPy fallback.
"""

import os

from . import _fallback

if os.environ.get("CRPLAP_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = "compiled" if _impl is not _fallback else "python"

resolvent_magnitude = _impl.resolvent_magnitude
resolvent_field = _impl.resolvent_field
dc_update = _impl.dc_update
