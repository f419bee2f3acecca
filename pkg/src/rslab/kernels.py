"""Hot-kernel backend selection.

The compiled extension ``rslab._kernels`` is used when it imports; otherwise
the numpy implementations in ``rslab._kernels_py`` are used.  Setting the
environment variable ``RSLAB_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("RSLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

phi2 = _impl.phi2
volterra_march = _impl.volterra_march
frac_integral = _impl.frac_integral
lagged_sum = _impl.lagged_sum
causal_conv = _impl.causal_conv
exp_sum = _impl.exp_sum
exp_sum_uniform = _impl.exp_sum_uniform

__all__ = [
    "BACKEND",
    "phi2",
    "volterra_march",
    "frac_integral",
    "lagged_sum",
    "causal_conv",
    "exp_sum",
    "exp_sum_uniform",
]
