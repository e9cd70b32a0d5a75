"""Backend selection for the RK4 kernels.

The compiled extension is used when it was built; set
``LORENTZDD_PURE_PYTHON=1`` to force the numpy implementation.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("LORENTZDD_PURE_PYTHON", "").strip() not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

rk4_linear = _impl.rk4_linear
rk4_bath = _impl.rk4_bath
