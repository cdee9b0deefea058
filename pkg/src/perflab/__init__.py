"""Kernel max-margin classification retrained under model-induced distribution shift."""
from ._core import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
