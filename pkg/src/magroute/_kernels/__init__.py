"""Hot-kernel backend selection.

The compiled Cython core is used when available; otherwise a pure-numpy
fallback with identical semantics takes over, so a source checkout works
without a compiler. Set MAGROUTE_BACKEND=python to force the fallback
(used by the backend-parity tests and the kernel benchmark).
"""
import os

from . import _numpy_impl

_impl = _numpy_impl
if os.environ.get("MAGROUTE_BACKEND", "").lower() not in ("python", "numpy"):
    try:
        from . import _core as _impl  # noqa: F811
    except ImportError:
        pass


def backend_name():
    return "numpy" if _impl is _numpy_impl else "cython"


def get_impl(name=None):
    """Return a specific backend module ('numpy' or 'cython'), or the active one."""
    if name is None:
        return _impl
    if name == "numpy":
        return _numpy_impl
    if name == "cython":
        from . import _core

        return _core
    raise ValueError(f"unknown kernel backend {name!r}")


segment_sum = _impl.segment_sum
scatter_add_rows = _impl.scatter_add_rows
edge_structural_stats = _impl.edge_structural_stats
