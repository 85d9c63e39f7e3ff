"""Backend selection for the inner-loop kernels.

The compiled extension is used when it imports cleanly. Set
``WAFERSMC_PURE_PYTHON=1`` to force the pure-Python fallback.
"""

import os

from . import _kernels_py

if os.environ.get("WAFERSMC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
gl_dot = _impl.gl_dot
gl_filter = _impl.gl_filter
rk4_advance = _impl.rk4_advance

__all__ = ["BACKEND", "gl_dot", "gl_filter", "rk4_advance"]
