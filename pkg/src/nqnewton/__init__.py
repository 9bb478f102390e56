"""Spectrally regularized Newton-type solvers for nonlinear systems.

Solves F(x) = 0 by descending on f(x) = ||F(x)||^2 with second-order
directions whose operators are shifted onto an eigenvalue floor, clamped
steps, and backtracking line searches; ships diagnostics that check the
descent, quadratic-rate, and saddle-escape behavior empirically.
"""

from ._kernels import BACKEND
from .diagnostics import (
    BasinGrid,
    Classification,
    basin_grid,
    classify_limit,
    estimate_order,
    gamma_one_region_check,
    holder_conjugate_ok,
    saddle_escape_mc,
)
from .errors import (
    ConfigError,
    EvaluationError,
    InsufficientData,
    InvalidInput,
    LineSearchStalled,
    MissingDerivative,
    NotCritical,
    NqnewtonError,
    RegularizationFailed,
    SingularMatrix,
)
from .problems import (
    ANALYTIC,
    CENTRAL_DIFFERENCE,
    DerivativeMode,
    Problem,
    corpus,
    corpus_by_name,
    eval_f,
    grad_f,
    hess_f,
    jacobian,
)
from .solvers import (
    DeltaLadder,
    LineSearch,
    RunResult,
    SolverConfig,
    TraceRecord,
    even_ladder,
    random_ladder,
    solve,
)
from .spectral import SpectralDecomposition, eigh, is_negative_definite, minsp, reflected_solve

__version__ = "0.1.0"
