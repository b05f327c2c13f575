"""Select the compiled kernels when available, the NumPy ones otherwise.

Set ``QRW_PURE_PYTHON=1`` before import to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("QRW_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"

theta_pairs = _impl.theta_pairs
coin_step = _impl.coin_step
szego_ratio = _impl.szego_ratio

__all__ = ["BACKEND", "theta_pairs", "coin_step", "szego_ratio"]
