"""Kernel backend selection.

The compiled extension is used when it imports cleanly; setting the
environment variable ``KRAFTY_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _fallback

BACKEND = "python"
kernels = _fallback

if os.environ.get("KRAFTY_PURE_PYTHON", "").strip() not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"


def get_kernels(name=None):
    """Return the kernel module for ``name`` ("cython", "python") or the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
