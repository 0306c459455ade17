"""Pick the compiled kernels when available, else the pure-Python ones.

Set ``PURCELL_BPF_PURE=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
integrate_linear = _kernels_py.integrate_linear
cascade_abcd = _kernels_py.cascade_abcd

if os.environ.get("PURCELL_BPF_PURE") != "1":
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        integrate_linear = _kernels.integrate_linear
        cascade_abcd = _kernels.cascade_abcd
        BACKEND = "cython"

SHUNT_STUB = _kernels_py.SHUNT_STUB
SERIES_LINE = _kernels_py.SERIES_LINE
