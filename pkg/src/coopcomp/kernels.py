"""Backend selection for the hot alternating-minimization kernel.

The compiled extension is preferred when present; set ``COOPCOMP_PURE=1``
to force the numpy fallback.  Both backends implement the identical
update order, so results agree to floating-point roundoff.
"""
from __future__ import annotations

import os

from . import _ba_pure

_FORCE_PURE = os.environ.get("COOPCOMP_PURE", "").strip().lower() in {"1", "true", "yes"}

if not _FORCE_PURE:
    try:
        from . import _ba_core as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _ba_pure
        BACKEND = "pure"
else:
    _impl = _ba_pure
    BACKEND = "pure"

solve_masked_mi = _impl.solve_masked_mi
solve_masked_mi_pure = _ba_pure.solve_masked_mi


def compiled_available() -> bool:
    try:
        from . import _ba_core  # noqa: F401
    except ImportError:
        return False
    return True
