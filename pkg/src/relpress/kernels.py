"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise, or when
``RELPRESS_PURE_PYTHON=1`` is set, the pure-Python twins are used.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("RELPRESS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

forward = _impl.forward
mask_sweep = _impl.mask_sweep


def backends():
    """Available backends by name, compiled first."""
    out = {}
    try:
        from . import _kernels as _compiled

        out["cython"] = _compiled
    except ImportError:
        pass
    out["python"] = _kernels_py
    return out
