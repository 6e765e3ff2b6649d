"""Variational quantum metrology: trainable probes and measurements for 3D field sensing."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402

__all__ = ["__version__", "BACKEND"]
