"""Functional autoregression with exogenous curves (FARX), estimated by PLS."""
__version__ = "0.1.0"

from .errors import FarxError  # noqa: E402
from .kernels import BACKEND  # noqa: E402

__all__ = ["FarxError", "BACKEND", "__version__"]
