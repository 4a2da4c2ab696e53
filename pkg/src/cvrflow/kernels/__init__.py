"""Hot-kernel backend selection.

The compiled extension is preferred; the numpy reference implementation
is used when the extension is missing or when CVRFLOW_PURE_PYTHON=1 is
set (handy for benchmarking the two against each other).
"""
import os

from . import reference

if os.environ.get("CVRFLOW_PURE_PYTHON") == "1":
    _impl = reference
    BACKEND = "python"
else:
    try:
        from . import _fast as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = reference
        BACKEND = "python"

sweep_power_flow = _impl.sweep_power_flow
soc_max_step = _impl.soc_max_step
nonneg_max_step = _impl.nonneg_max_step

__all__ = ["sweep_power_flow", "soc_max_step", "nonneg_max_step", "BACKEND", "reference"]
