"""Select the compiled kernels when available, else the numpy fallback.

Set ``RANDFACTOR_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

BACKEND = "python"
moment_batch = _fallback.moment_batch
gram_batch = _fallback.gram_batch

if not os.environ.get("RANDFACTOR_PURE_PYTHON"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        _kernels = None
    if _kernels is not None:
        BACKEND = "cython"
        moment_batch = _kernels.moment_batch
        gram_batch = _kernels.gram_batch
