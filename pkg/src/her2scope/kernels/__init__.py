"""Kernel backend selection.

The compiled extension is preferred when importable; set
``HER2SCOPE_BACKEND=pure`` to force the numpy fallback (used by the
backend-equivalence tests and the kernel benchmark).
"""

from __future__ import annotations

import os

from . import pure

_forced = os.environ.get("HER2SCOPE_BACKEND", "").strip().lower()

if _forced == "pure":
    _impl = pure
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        if _forced == "native":
            raise
        _impl = pure

BACKEND = _impl.BACKEND_NAME
bilateral = _impl.bilateral
zhang_suen_thin = _impl.zhang_suen_thin


def available_backends() -> dict[str, object]:
    """Importable kernel modules keyed by backend name."""
    backends: dict[str, object] = {"pure": pure}
    try:
        from . import _native

        backends["native"] = _native
    except ImportError:
        pass
    return backends
