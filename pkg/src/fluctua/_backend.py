"""Pick the path-kernel implementation at import time.

``FLUCTUA_BACKEND=python`` forces the numpy fallback, ``compiled`` requires
the extension, and anything else (the default) prefers the extension when it
imports.
"""

from __future__ import annotations

import os

from . import _fallback

_choice = os.environ.get("FLUCTUA_BACKEND", "auto").lower()

compiled = None
if _choice != "python":
    try:
        from . import _kernels as compiled
    except ImportError:
        if _choice == "compiled":
            raise

kernel = compiled if compiled is not None else _fallback
name = "compiled" if compiled is not None else "python"
fallback = _fallback


def get(backend: str | None = None):
    """Kernel module for ``backend`` in {None, "compiled", "python"}."""
    if backend is None:
        return kernel
    if backend == "python":
        return _fallback
    if backend == "compiled":
        if compiled is None:
            raise ImportError("compiled kernels are not available")
        return compiled
    raise ValueError(f"unknown backend {backend!r}")
