"""Backend selection for the disk kernels.

The compiled extension is used when it was built; setting
``NHSLIP_PURE_PYTHON=1`` forces the pure-Python fallback.
"""
import os

from . import _kernels_py

FULL, ZEROTH, FIRST = 0, 1, 2
MODEL_CODES = {"full": FULL, "zeroth": ZEROTH, "first": FIRST}

_compiled = None
if os.environ.get("NHSLIP_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

if _compiled is not None:
    BACKEND = "cython"
    disk_rhs = _compiled.disk_rhs
    disk_rk4 = _compiled.disk_rk4
else:
    BACKEND = "python"
    disk_rhs = _kernels_py.disk_rhs
    disk_rk4 = _kernels_py.disk_rk4


def compiled_module():
    """The compiled module, or None when only the fallback is available."""
    return _compiled
