"""Random-circuit quantum cryptography on an exact statevector simulator."""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
