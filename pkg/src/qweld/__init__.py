"""Quantum-kernel SVM (VQLS-backed) and variational classifier for weld-defect features,
on a dense statevector simulator."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402  ("numba" or "numpy")

__all__ = ["BACKEND", "__version__"]
