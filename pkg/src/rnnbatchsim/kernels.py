"""Kernel backend selection.

Prefers the compiled Cython kernels, falls back to the pure-Python module
when the extension is missing. Set RNNBATCHSIM_PURE=1 to force the fallback
(used by the parity tests and the benchmark).
"""

import os

if os.environ.get("RNNBATCHSIM_PURE"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND
lpt_pack = _impl.lpt_pack
CellularRunner = _impl.CellularRunner
