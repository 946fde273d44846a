"""Selects the compiled DP core when available, else the pure fallback.

Set TRIPLEGAK_BACKEND=python or =c to force a side; forcing the compiled
side when the extension is missing raises at import.
"""

from __future__ import annotations

import os

from . import _dppy

_FORCED = os.environ.get("TRIPLEGAK_BACKEND", "").strip().lower()

if _FORCED in ("python", "py"):
    BACKEND = "python"
    dp_forward = _dppy.dp_forward
else:
    try:
        from . import _dpcore

        BACKEND = "c"
        dp_forward = _dpcore.dp_forward
    except ImportError:
        if _FORCED == "c":
            raise
        BACKEND = "python"
        dp_forward = _dppy.dp_forward


def available_backends() -> list[str]:
    out = ["python"]
    try:
        from . import _dpcore  # noqa: F401

        out.append("c")
    except ImportError:
        pass
    return out
