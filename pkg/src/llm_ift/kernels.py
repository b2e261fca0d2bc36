"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``LLM_IFT_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

try:
    if os.environ.get("LLM_IFT_PURE_PYTHON"):
        raise ImportError("pure Python forced")
    from . import _kernels as _impl
except ImportError:
    _impl = _kernels_py

IMPLEMENTATION = _impl.IMPLEMENTATION
propagate_tags = _impl.propagate_tags
influence_scan = _impl.influence_scan
evaluate = _impl.evaluate


def available() -> dict:
    """Every importable implementation, keyed by name."""
    impls = {"python": _kernels_py}
    try:
        from . import _kernels
        impls["cython"] = _kernels
    except ImportError:
        pass
    return impls
