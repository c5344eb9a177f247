"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the numpy
fallback is used. ``COALINT_BACKEND=python`` or ``=compiled`` forces the
choice (the latter raises if the extension is missing, instead of silently
degrading a benchmark).
"""

from __future__ import annotations

import os

from . import _kernels_py

_forced = os.environ.get("COALINT_BACKEND", "").strip().lower()

if _forced == "python":
    kernels = _kernels_py
elif _forced == "compiled":
    from . import _kernels as kernels  # type: ignore[no-redef]
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

BACKEND = kernels.BACKEND_NAME


def available_backends() -> dict[str, object]:
    """All importable kernel modules, keyed by name."""
    found: dict[str, object] = {_kernels_py.BACKEND_NAME: _kernels_py}
    try:
        from . import _kernels

        found[_kernels.BACKEND_NAME] = _kernels
    except ImportError:
        pass
    return found
