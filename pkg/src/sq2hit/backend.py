"""Selects the compiled kernel when it is built, else the pure-Python twin.

Set ``SQ2HIT_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernel as python

try:
    if os.environ.get("SQ2HIT_PURE", "") not in ("", "0"):
        raise ImportError("pure backend requested")
    from . import _kernel as compiled
except ImportError:
    compiled = None

active = compiled if compiled is not None else python
NAME = "compiled" if compiled is not None else "python"


def get(name: str | None = None):
    """Return a kernel module by name (``compiled``/``python``) or the active one."""
    if name is None:
        return active
    if name == "python":
        return python
    if name == "compiled":
        if compiled is None:
            raise ImportError("compiled kernel is not built")
        return compiled
    raise ValueError("unknown backend %r" % name)
