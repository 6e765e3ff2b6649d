"""Backend selection for the hot loops.

The compiled extension is used when it was built; set ``VQM_PURE_PYTHON=1`` to
force the numpy fallback (the benchmark and the parity tests do this).
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("VQM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

apply_1q = _impl.apply_1q
apply_1q_dm = _impl.apply_1q_dm
apply_kraus_1q = _impl.apply_kraus_1q
cfim = _impl.cfim

__all__ = ["BACKEND", "apply_1q", "apply_1q_dm", "apply_kraus_1q", "cfim"]
