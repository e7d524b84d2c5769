"""Kernel backend selection.

Two interchangeable implementations of the dynamics/collision kernels
exist: a compiled Cython extension (``_core``) and a pure-Python numpy
reference (``reference``). The compiled one is used when available;
``INFANTSIM_KERNELS=python|compiled|auto`` overrides the choice. Both
expose the same functions over the same flat arrays.
"""

from __future__ import annotations

import os

from . import reference

_COMPILED = None
_IMPORT_ERROR = None
try:
    from . import _core as _COMPILED  # noqa: F401
except ImportError as exc:  # pragma: no cover - depends on build environment
    _IMPORT_ERROR = exc


def available_backends():
    out = ["python"]
    if _COMPILED is not None:
        out.insert(0, "compiled")
    return out


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: env var or auto)."""
    name = name or os.environ.get("INFANTSIM_KERNELS", "auto")
    if name in ("python", "reference"):
        return reference
    if name == "compiled":
        if _COMPILED is None:
            raise ImportError(f"compiled kernels are not available: {_IMPORT_ERROR}")
        return _COMPILED
    if name == "auto":
        return _COMPILED if _COMPILED is not None else reference
    raise ValueError(f"unknown kernel backend {name!r}")


def backend_name(mod):
    return "python" if mod is reference else "compiled"
