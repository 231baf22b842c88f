"""Backend selection for the numerical kernels.

The compiled extension is used when it was built and imports cleanly;
otherwise the numpy versions are used. Setting ``FARXTS_PURE_PYTHON=1``
forces the fallback.
"""
import logging
import os

from . import _kernels_py

logger = logging.getLogger(__name__)

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("FARXTS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels_cy as _compiled
    except ImportError:  # extension not built
        logger.debug("compiled kernels unavailable, using numpy fallback")
    else:
        _impl = _compiled
        BACKEND = "cython"

bspline_basis = _impl.bspline_basis
nipals_weights = _impl.nipals_weights

__all__ = ["BACKEND", "bspline_basis", "nipals_weights"]
