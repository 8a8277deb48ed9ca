"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when
``DAGPLACE_PURE_PYTHON=1`` is set, the pure-Python twins are used.
"""
import os

from dagplace._kernels import _pykernels as python_backend

try:
    from dagplace._kernels import _ckernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("DAGPLACE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    active = compiled_backend
else:
    active = python_backend

BACKEND = active.BACKEND
breakpoint_dp = active.breakpoint_dp
simulate = active.simulate

__all__ = ["BACKEND", "active", "breakpoint_dp", "simulate", "python_backend", "compiled_backend"]
