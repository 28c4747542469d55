"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback is used. Setting ``NISQCRYPT_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("NISQCRYPT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

apply_1q = _impl.apply_1q
apply_2q = _impl.apply_2q
apply_2q_batch = _impl.apply_2q_batch
zero_probability = _impl.zero_probability

__all__ = ["BACKEND", "apply_1q", "apply_2q", "apply_2q_batch", "zero_probability"]
