"""Kernel backend selection: compiled extension when available, numpy
fallback otherwise.  Set ADMMTRACK_FORCE_PURE=1 to force the fallback."""

from __future__ import annotations

import os

if os.environ.get("ADMMTRACK_FORCE_PURE"):
    from . import _fallback as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _fallback as _impl

BACKEND: str = _impl.BACKEND
tracking_step = _impl.tracking_step
