"""Kernel backend selection.

Uses the compiled extension when it imports, else the numpy fallback.
Set ``MOBWEIGH_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("MOBWEIGH_PURE_PYTHON", "").strip() in ("", "0"):
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

BACKEND: str = _impl.BACKEND
build_tree = _impl.build_tree
predict_tree = _impl.predict_tree
smo_solve = _impl.smo_solve


def backends() -> dict:
    """All importable backends by name, for benchmarking and parity tests."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
