"""Kernel backend selection.

The compiled Cython extension is preferred when importable; the pure-numpy
module is the fallback. Set NQNEWTON_PURE_PYTHON=1 to force the fallback
(used by the benchmark and the test matrix).
"""

import os

from . import _py_core

if os.environ.get("NQNEWTON_PURE_PYTHON"):
    _impl = _py_core
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _py_core

BACKEND = _impl.BACKEND
BRANCH_FULL = _impl.BRANCH_FULL
BRANCH_TAU = _impl.BRANCH_TAU

sym_eigh = _impl.sym_eigh
ladder_first_index = _impl.ladder_first_index
spectral_apply_inverse = _impl.spectral_apply_inverse
nqnse_direction = _impl.nqnse_direction
lmm_direction = _impl.lmm_direction
general_direction = _impl.general_direction
qnorm_column_weights = _impl.qnorm_column_weights

#: Both backends, for tests and benchmarks that compare them.
def available_backends():
    backends = {"python": _py_core}
    try:
        from . import _core
        backends["compiled"] = _core
    except ImportError:
        pass
    return backends
