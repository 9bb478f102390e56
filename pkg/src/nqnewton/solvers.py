"""Newton-type solvers for F(x) = 0 driven by descent on f = ||F||^2.

Four methods share one iteration driver:

``nqn-se``
    Spectral-reflection method. The second-order operator
    ``B = H^T H + sum_i F_i hess F_i`` (half the Hessian of f) is shifted by
    the first ladder entry ``delta_j * scale`` that lifts every eigenvalue's
    magnitude above ``kappa * scale``, where ``scale`` is ``||F||`` when
    ``minsp(B) > ||F||^tau`` and ``||F||^tau`` otherwise. The step solves the
    shifted system against ``H^T F`` with the negative eigenspace reflected,
    so the direction is always a descent direction for f.

``lm-m``
    Damped Gauss-Newton. ``A = H^T H + delta_0 ||F|| I`` when
    ``minsp(H^T H) > ||F||^tau``, else ``A = H^T H + delta_1 ||F||^tau I``;
    A is positive definite by construction and the solve is plain.

``general``
    q-norm weighted scheme: the same ladder regularization applied to a
    symmetric operator ``B`` (here: the full Hessian of f), with the step
    assembled per basis vector as ``<grad f, e_i> / ||A e_i||_q``.

``newton``
    Plain Newton on the square system, as a baseline; no line search and no
    descent guarantee (it famously admits attracting cycles of non-roots).

All descent methods clamp the step to ``w / max(1, ||w||)`` and backtrack on
the acceptance condition

    f(x - gamma*w_hat) - f(x) <= -gamma * <w_hat, H^T F>,

a sufficient-decrease test with constant 1/2 relative to grad f = 2 H^T F.
The step grid is halving, a random-base geometric grid, or either wrapped in
an eta-gate (full step, no test, whenever ||F(x - w)|| <= eta ||F(x)||) or a
Jacobian-determinant guard.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .errors import (
    ConfigError,
    EvaluationError,
    InvalidInput,
    LineSearchStalled,
    RegularizationFailed,
    SingularMatrix,
)
from .problems import (
    ANALYTIC,
    CENTRAL_DIFFERENCE,
    Problem,
    eval_f,
    half_hessian,
    hess_f,
    jacobian,
)
from .spectral import reflected_solve, symmetrize

__all__ = [
    "DeltaLadder",
    "LineSearch",
    "SolverConfig",
    "TraceRecord",
    "RunResult",
    "METHODS",
    "TERMINATIONS",
    "random_ladder",
    "even_ladder",
    "regularize_nqnse",
    "regularize_lmm",
    "direction_nqnse",
    "direction_lmm",
    "direction_general",
    "armijo_halving",
    "armijo_beta_grid",
    "hybrid_eta_gate",
    "det_guard_search",
    "newton_baseline_step",
    "solve",
]

METHODS = ("nqn-se", "lm-m", "general", "newton")
LINE_SEARCHES = ("halving", "beta-grid", "hybrid")
BASES = ("standard", "eigen")

BRANCH_FULL = "FullNorm"
BRANCH_TAU = "TauNorm"
_BRANCH_NAMES = {_kernels.BRANCH_FULL: BRANCH_FULL, _kernels.BRANCH_TAU: BRANCH_TAU}

ROOT_FOUND = "RootFound"
CRITICAL_NON_ROOT = "CriticalNonRoot"
MAX_ITERATIONS = "MaxIterations"
DIVERGED = "Diverged"
LINE_SEARCH_STALLED = "LineSearchStalled"
TERMINATIONS = (ROOT_FOUND, CRITICAL_NON_ROOT, MAX_ITERATIONS, DIVERGED, LINE_SEARCH_STALLED)

_MIN_DELTA_GAP = 1e-3


@dataclass(frozen=True)
class DeltaLadder:
    """Positive shift multipliers tried in order; kappa is half the minimum
    pairwise gap and sets the eigenvalue floor the shifted operator must
    clear."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 2:
            raise ConfigError("deltas: at least two ladder entries are required")
        if any(v <= 0 for v in vals):
            raise ConfigError("deltas: all ladder entries must be positive")
        gap = min(
            abs(a - b) for i, a in enumerate(vals) for b in vals[i + 1 :]
        )
        if gap < _MIN_DELTA_GAP:
            raise ConfigError(
                f"deltas: pairwise gaps must be >= {_MIN_DELTA_GAP} (got {gap:g})"
            )

    @property
    def kappa(self) -> float:
        return 0.5 * min(
            abs(a - b) for i, a in enumerate(self.values) for b in self.values[i + 1 :]
        )

    def __len__(self):
        return len(self.values)


def random_ladder(rng: np.random.Generator, count: int) -> DeltaLadder:
    """Draw `count` shifts i.i.d. uniform from [1, 2], resampling until all
    pairwise gaps are >= 1e-3."""
    while True:
        vals = rng.uniform(1.0, 2.0, size=count)
        gap = min(
            (abs(a - b) for i, a in enumerate(vals) for b in vals[i + 1 :]),
            default=1.0,
        )
        if gap >= _MIN_DELTA_GAP:
            return DeltaLadder(tuple(vals))


def even_ladder(count: int, lo: float = 1.0, hi: float = 2.0) -> DeltaLadder:
    """Deterministic evenly spaced ladder on [lo, hi]."""
    if count < 2:
        raise ConfigError("deltas: at least two ladder entries are required")
    return DeltaLadder(tuple(np.linspace(lo, hi, count)))


@dataclass(frozen=True)
class LineSearch:
    """Step-size policy.

    kind "halving": grid {1, 1/2, 1/4, ...}. kind "beta-grid": grid {beta^n},
    beta drawn once per run from the seeded RNG when not fixed. kind
    "hybrid": full unclamped step without any test whenever it contracts
    ||F|| by the factor eta, else the inner grid policy.
    """

    kind: str = "halving"
    beta: Optional[float] = None
    eta: Optional[float] = None
    inner: str = "halving"


@dataclass(frozen=True)
class SolverConfig:
    method: str = "nqn-se"
    deltas: Optional[DeltaLadder] = None  # None: drawn from the run's seeded RNG
    tau: float = 0.5
    line_search: LineSearch = field(default_factory=LineSearch)
    det_guard: Optional[float] = None
    q: float = 1.0
    basis: str = "standard"
    tol_root: float = 1e-10
    tol_crit: float = 1e-8
    max_iter: int = 10000
    gamma_min: float = 2.0**-60
    divergence_radius: float = 1e8
    rng_seed: int = 0
    allow_tau_ge_1: bool = False
    derivatives: str = "auto"  # "auto" | "central"

    def validate(self, problem: Optional[Problem] = None) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method: {self.method!r} is not one of {METHODS}")
        if not self.tau > 0:
            raise ConfigError(f"tau: must be > 0 (got {self.tau})")
        if self.tau >= 1 and not self.allow_tau_ge_1:
            raise ConfigError(
                f"tau: must lie in (0, 1) (got {self.tau}); the descent and "
                "avoidance guarantees are proved for tau < 1. Set "
                "allow_tau_ge_1 to override."
            )
        ls = self.line_search
        if ls.kind not in LINE_SEARCHES:
            raise ConfigError(f"line_search: {ls.kind!r} is not one of {LINE_SEARCHES}")
        if ls.beta is not None and not 0 < ls.beta < 1:
            raise ConfigError(f"beta: must lie in (0, 1) (got {ls.beta})")
        if ls.kind == "hybrid":
            if ls.eta is None or not 0 < ls.eta < 1:
                raise ConfigError(f"eta: must lie in (0, 1) (got {ls.eta})")
            if ls.inner not in ("halving", "beta-grid"):
                raise ConfigError(f"line_search inner: {ls.inner!r} invalid")
        if self.det_guard is not None and self.det_guard < 0:
            raise ConfigError(f"det_guard: must be >= 0 (got {self.det_guard})")
        if self.q < 1:
            raise ConfigError(f"q: must be >= 1 (got {self.q})")
        if self.basis not in BASES:
            raise ConfigError(f"basis: {self.basis!r} is not one of {BASES}")
        for name in ("tol_root", "tol_crit", "gamma_min", "divergence_radius"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name}: must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter: must be >= 1")
        if self.derivatives not in ("auto", "central"):
            raise ConfigError(f"derivatives: {self.derivatives!r} invalid")
        if problem is not None:
            if self.det_guard is not None and not problem.is_square:
                raise ConfigError(
                    "det_guard: undefined for rectangular systems "
                    f"({problem.name} maps R^{problem.domain_dim} -> R^{problem.codomain_dim})"
                )
            if self.method == "newton" and not problem.is_square:
                raise ConfigError("method: newton requires a square system")
            if self.deltas is not None:
                need = 2 if self.method == "lm-m" else problem.domain_dim + 1
                if self.method == "lm-m" and len(self.deltas) != 2:
                    raise ConfigError("deltas: lm-m takes exactly two ladder entries")
                if self.method in ("nqn-se", "general") and len(self.deltas) < need:
                    raise ConfigError(
                        f"deltas: {self.method} needs at least dim+1 = {need} entries "
                        f"(got {len(self.deltas)})"
                    )


@dataclass(frozen=True)
class TraceRecord:
    """One iterate: the point, its merit values, and the step taken from it.

    The terminal iterate carries delta_index/branch/minsp_a of None and a
    zero gamma/step_norm.
    """

    k: int
    x: np.ndarray
    f_val: float
    grad_half_norm: float
    delta_index: Optional[int]
    branch: Optional[str]
    minsp_a: Optional[float]
    gamma: float
    step_norm: float


@dataclass(frozen=True)
class RunResult:
    trace: list
    termination: str
    final_x: np.ndarray
    order_estimate: Optional[float]
    deltas_used: Optional[tuple]
    beta_used: Optional[float]
    method: str

    @property
    def iterations(self) -> int:
        return len(self.trace)


# ---------------------------------------------------------------------------
# Regularization and directions (public op layer)
# ---------------------------------------------------------------------------

def regularize_nqnse(hess, norm_f: float, ladder: DeltaLadder, tau: float):
    """Shift a symmetric operator onto the eigenvalue floor.

    Scale is ||F|| when minsp(hess) > ||F||^tau (FullNorm branch) and
    ||F||^tau otherwise (TauNorm); returns (A, j, branch) for the smallest
    ladder index j with minsp(hess + delta_j*scale*I) >= kappa*scale.
    """
    if not norm_f > 0:
        raise InvalidInput("regularize_nqnse requires ||F|| > 0")
    sym = symmetrize(hess)
    vals, _ = _kernels.sym_eigh(sym)
    if float(np.min(np.abs(vals))) > norm_f**tau:
        branch, scale = BRANCH_FULL, norm_f
    else:
        branch, scale = BRANCH_TAU, norm_f**tau
    j = int(_kernels.ladder_first_index(np.asarray(vals), np.asarray(ladder.values), scale, ladder.kappa))
    if j < 0:
        raise RegularizationFailed(
            f"ladder exhausted (scale {scale:g}, kappa {ladder.kappa:g}); "
            "this cannot happen with >= dim+1 distinct entries"
        )
    amat = sym + ladder.values[j] * scale * np.eye(sym.shape[0])
    return amat, j, branch


def regularize_lmm(hth, norm_f: float, ladder: DeltaLadder, tau: float):
    """Two-entry shift for the damped Gauss-Newton operator; no search loop
    (H^T H is positive semidefinite, so either shift is definite)."""
    if not norm_f > 0:
        raise InvalidInput("regularize_lmm requires ||F|| > 0")
    sym = symmetrize(hth)
    vals, _ = _kernels.sym_eigh(sym)
    if float(np.min(np.abs(vals))) > norm_f**tau:
        j, shift, branch = 0, ladder.values[0] * norm_f, BRANCH_FULL
    else:
        j, shift, branch = 1, ladder.values[1] * norm_f**tau, BRANCH_TAU
    return sym + shift * np.eye(sym.shape[0]), j, branch


def _clamp(w: np.ndarray):
    return w / max(1.0, math.sqrt(float(w @ w)))


def direction_nqnse(a_mat, grad_half):
    """Reflected solve of the regularized operator against H^T F, plus the
    unit-ball clamp. Returns (w, w_hat)."""
    w = reflected_solve(a_mat, grad_half)
    return w, _clamp(w)


def direction_lmm(a_mat, grad_half):
    """Plain positive-definite solve plus the clamp. Returns (w, w_hat)."""
    sym = symmetrize(a_mat)
    vals, vecs = _kernels.sym_eigh(sym)
    if vals[0] <= 0:
        raise SingularMatrix("lm-m operator is not positive definite")
    w = np.asarray(_kernels.spectral_apply_inverse(np.asarray(vals), np.asarray(vecs), np.asarray(grad_half, dtype=float), 0.0, False))
    return w, _clamp(w)


def direction_general(a_mat, grad, basis, q: float):
    """q-norm weighted direction sum_i (<grad, e_i> / ||A e_i||_q) e_i over an
    orthonormal basis. In the eigenbasis of A every weight is |lambda_i|, so
    the direction coincides with the reflected solve."""
    sym = symmetrize(a_mat)
    basis = np.asarray(basis, dtype=float)
    m = sym.shape[0]
    if basis.shape != (m, m):
        raise InvalidInput(f"basis shape {basis.shape} does not match dim {m}")
    if not np.allclose(basis.T @ basis, np.eye(m), atol=1e-10):
        raise InvalidInput("basis columns are not orthonormal within 1e-10")
    grad = np.asarray(grad, dtype=float)
    img = sym @ basis  # column i = A e_i
    coords = basis.T @ img  # <A e_i, e_j> at [j, i]
    weights = np.asarray(_kernels.qnorm_column_weights(np.ascontiguousarray(coords), float(q)))
    if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
        raise SingularMatrix("a basis direction has zero q-norm weight under A")
    w = basis @ ((basis.T @ grad) / weights)
    return w, _clamp(w)


# ---------------------------------------------------------------------------
# Line searches
# ---------------------------------------------------------------------------

def _merit_or_inf(problem: Problem, x: np.ndarray) -> float:
    # Trial points may overflow the evaluators; treat that as +inf, i.e. reject.
    try:
        return eval_f(problem, x)
    except EvaluationError:
        return math.inf


def _geometric_grid(ratio: float):
    gamma = 1.0
    while True:
        yield gamma
        gamma *= ratio


def _backtrack(problem, x, w_hat, grad_half, gamma_min, ratio, extra_ok=None, f0=None):
    """Largest grid step satisfying the acceptance condition (and the extra
    predicate, when given). Returns (gamma, x_trial, f_trial)."""
    x = np.asarray(x, dtype=float)
    w_hat = np.asarray(w_hat, dtype=float)
    slope = float(np.dot(w_hat, np.asarray(grad_half, dtype=float)))
    if f0 is None:
        f0 = eval_f(problem, x)
    for gamma in _geometric_grid(ratio):
        if gamma < gamma_min:
            raise LineSearchStalled(
                f"no step >= gamma_min {gamma_min:g} satisfied the acceptance conditions"
            )
        x_trial = x - gamma * w_hat
        f_trial = _merit_or_inf(problem, x_trial)
        if f_trial - f0 <= -gamma * slope and (extra_ok is None or extra_ok(x_trial)):
            return gamma, x_trial, f_trial


def armijo_halving(problem: Problem, x, w_hat, grad_half, gamma_min: float = 2.0**-60) -> float:
    """Largest gamma in {1, 1/2, 1/4, ...} >= gamma_min with
    f(x - gamma*w_hat) - f(x) <= -gamma <w_hat, H^T F>."""
    gamma, _, _ = _backtrack(problem, x, w_hat, grad_half, gamma_min, 0.5)
    return gamma


def armijo_beta_grid(problem: Problem, x, w_hat, grad_half, beta: float, gamma_min: float = 2.0**-60) -> float:
    """Same acceptance condition on the grid {beta^n}."""
    if not 0 < beta < 1:
        raise ConfigError(f"beta: must lie in (0, 1) (got {beta})")
    gamma, _, _ = _backtrack(problem, x, w_hat, grad_half, gamma_min, beta)
    return gamma


def eta_gate_fires(problem: Problem, x, w, eta: float) -> bool:
    """True when the full unclamped step contracts ||F|| by the factor eta."""
    x = np.asarray(x, dtype=float)
    norm_f = float(np.linalg.norm(problem.eval(x)))
    try:
        norm_trial = float(np.linalg.norm(problem.eval(x - np.asarray(w, dtype=float))))
    except EvaluationError:
        return False
    return norm_trial <= eta * norm_f


def hybrid_eta_gate(problem: Problem, x, w, eta: float, inner: Callable[..., float],
                    grad_half=None, gamma_min: float = 2.0**-60) -> float:
    """Gated search: gamma = 1 on the unclamped w whenever the gate fires
    (no acceptance test), else the inner policy on the clamped direction.

    `inner` is armijo_halving or a partial of armijo_beta_grid.
    """
    if not 0 < eta < 1:
        raise ConfigError(f"eta: must lie in (0, 1) (got {eta})")
    if eta_gate_fires(problem, x, w, eta):
        return 1.0
    if grad_half is None:
        raise InvalidInput("hybrid_eta_gate needs grad_half for the inner search")
    return inner(problem, x, _clamp(np.asarray(w, dtype=float)), grad_half, gamma_min)


def det_guard_search(problem: Problem, x, w_hat, grad_half, epsilon: float,
                     ratio: float = 0.5, gamma_min: float = 2.0**-60) -> float:
    """Largest grid step satisfying the acceptance condition AND keeping
    |det JF| above epsilon at the trial point. Square systems only."""
    if not problem.is_square:
        raise ConfigError("det_guard: undefined for rectangular systems")

    def guard(x_trial):
        try:
            jac = jacobian(problem, x_trial, ANALYTIC)
        except EvaluationError:
            return False
        return abs(float(np.linalg.det(jac))) > epsilon

    gamma, _, _ = _backtrack(problem, x, w_hat, grad_half, gamma_min, ratio, extra_ok=guard)
    return gamma


def newton_baseline_step(problem: Problem, x) -> np.ndarray:
    """One plain Newton step x - JF(x)^-1 F(x) on a square system."""
    if not problem.is_square:
        raise InvalidInput("newton baseline requires a square system")
    x = np.asarray(x, dtype=float)
    fx = problem.eval(x)
    jac = jacobian(problem, x, ANALYTIC)
    try:
        step = np.linalg.solve(jac, fx)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(f"Jacobian singular at x={x}") from exc
    return x - step


# ---------------------------------------------------------------------------
# Iteration driver
# ---------------------------------------------------------------------------

def _order_from_trace(trace, final_x):
    # Late import: diagnostics depends on this module.
    from .diagnostics import estimate_order

    errors = []
    for rec in trace[:-1]:
        d = rec.x - final_x
        errors.append(math.sqrt(float(d @ d)))
    # keep the maximal strictly-decreasing positive tail
    tail = []
    for e in reversed(errors):
        if e <= 0 or (tail and e <= tail[-1]):
            break
        tail.append(e)
    tail.reverse()
    if len(tail) < 4:
        return None
    try:
        return estimate_order(tail)
    except Exception:
        return None


def _det_ok(problem, x, epsilon):
    try:
        jac = jacobian(problem, x, ANALYTIC)
    except EvaluationError:
        return False
    return abs(float(np.linalg.det(jac))) > epsilon


def solve(problem: Problem, config: SolverConfig, x0) -> RunResult:
    """Run the configured method from x0 until a terminal state.

    Before each step the iterate is classified: RootFound when
    ``||F|| <= tol_root``, CriticalNonRoot when ``||H^T F|| <= tol_crit``,
    Diverged when ``||x|| >= divergence_radius``, MaxIterations at the cap.
    A stalled line search terminates the run rather than raising. The trace
    holds one record per iterate including x0.
    """
    config.validate(problem)
    x = np.array(x0, dtype=float).reshape(-1)
    if x.shape != (problem.domain_dim,):
        raise InvalidInput(
            f"x0 has shape {x.shape}, expected ({problem.domain_dim},)"
        )

    method = config.method
    ls = config.line_search
    needs_beta = ls.beta is None and (
        ls.kind == "beta-grid" or (ls.kind == "hybrid" and ls.inner == "beta-grid")
    )
    ladder = config.deltas
    rng = None
    if ladder is None and method != "newton" or needs_beta:
        rng = np.random.default_rng(config.rng_seed)
    if ladder is None and method in ("nqn-se", "general"):
        ladder = random_ladder(rng, problem.domain_dim + 1)
    elif ladder is None and method == "lm-m":
        ladder = random_ladder(rng, 2)

    beta = ls.beta
    if needs_beta:
        beta = float(rng.uniform(0.05, 0.95))
    inner_ratio = 0.5
    if ls.kind == "beta-grid" or (ls.kind == "hybrid" and ls.inner == "beta-grid"):
        inner_ratio = beta

    mode = CENTRAL_DIFFERENCE if config.derivatives == "central" else ANALYTIC
    deltas_arr = np.asarray(ladder.values) if ladder is not None else None
    kappa = ladder.kappa if ladder is not None else None
    comp_hess = None
    if mode.kind == "analytic":
        comp_hess = problem.component_hessians_analytic

    trace = []
    termination = None

    for k in range(config.max_iter + 1):
        fx = problem.eval(x)
        f_val = float(fx @ fx)
        norm_f = math.sqrt(f_val)
        jac = jacobian(problem, x, mode)
        gh = jac.T @ fx
        gh_norm = math.sqrt(float(gh @ gh))

        if norm_f <= config.tol_root:
            termination = ROOT_FOUND
        elif gh_norm <= config.tol_crit:
            termination = CRITICAL_NON_ROOT
        elif float(x @ x) >= config.divergence_radius**2:
            termination = DIVERGED
        elif k >= config.max_iter:
            termination = MAX_ITERATIONS
        if termination is not None:
            trace.append(TraceRecord(k, x.copy(), f_val, gh_norm, None, None, None, 0.0, 0.0))
            break

        # direction
        j = branch = minsp_a = None
        if method == "nqn-se":
            if comp_hess is not None:
                acc = jac.T @ jac
                for fi, hi in zip(fx, comp_hess(x)):
                    acc = acc + fi * hi
                bmat = 0.5 * (acc + acc.T)
            else:
                bmat = half_hessian(problem, x, mode)
            w, j, branch_code, minsp_a = _kernels.nqnse_direction(
                np.ascontiguousarray(bmat), gh, norm_f, deltas_arr, config.tau, kappa
            )
            if j < 0:
                raise RegularizationFailed(f"ladder exhausted at iterate {k}")
            branch = _BRANCH_NAMES[branch_code]
        elif method == "lm-m":
            hth = jac.T @ jac
            w, j, minsp_a = _kernels.lmm_direction(
                np.ascontiguousarray(0.5 * (hth + hth.T)), gh, norm_f,
                ladder.values[0], ladder.values[1], config.tau,
            )
            branch = BRANCH_FULL if j == 0 else BRANCH_TAU
        elif method == "general":
            if comp_hess is not None:
                acc = jac.T @ jac
                for fi, hi in zip(fx, comp_hess(x)):
                    acc = acc + fi * hi
                bmat = acc + acc.T  # = full hessian of f, exactly symmetric
            else:
                bmat = hess_f(problem, x, CENTRAL_DIFFERENCE)
            w, j, branch_code, minsp_a = _kernels.general_direction(
                np.ascontiguousarray(bmat), 2.0 * gh, norm_f, deltas_arr,
                config.tau, kappa, config.q, config.basis == "eigen",
            )
            if j < 0:
                raise RegularizationFailed(f"ladder exhausted at iterate {k}")
            branch = _BRANCH_NAMES[branch_code]
        else:  # newton baseline
            try:
                x_next = newton_baseline_step(problem, x)
            except SingularMatrix:
                termination = LINE_SEARCH_STALLED
                trace.append(TraceRecord(k, x.copy(), f_val, gh_norm, None, None, None, 0.0, 0.0))
                break
            step_norm = float(np.linalg.norm(x_next - x))
            trace.append(TraceRecord(k, x.copy(), f_val, gh_norm, None, None, None, 1.0, step_norm))
            x = x_next
            continue

        w = np.asarray(w)
        w_hat = _clamp(w)

        # step size
        guard_eps = config.det_guard
        extra_ok = (lambda xt: _det_ok(problem, xt, guard_eps)) if guard_eps is not None else None
        try:
            if ls.kind == "hybrid" and eta_gate_fires(problem, x, w, ls.eta) and (
                extra_ok is None or extra_ok(x - w)
            ):
                gamma, x_next = 1.0, x - w
            else:
                gamma, x_next, _ = _backtrack(
                    problem, x, w_hat, gh, config.gamma_min, inner_ratio,
                    extra_ok=extra_ok, f0=f_val,
                )
        except LineSearchStalled:
            termination = LINE_SEARCH_STALLED
            trace.append(
                TraceRecord(k, x.copy(), f_val, gh_norm, j, branch, minsp_a, 0.0, 0.0)
            )
            break

        step = x_next - x
        step_norm = math.sqrt(float(step @ step))
        trace.append(
            TraceRecord(k, x.copy(), f_val, gh_norm, j, branch, minsp_a, gamma, step_norm)
        )
        x = x_next

    final_x = trace[-1].x
    order = _order_from_trace(trace, final_x) if termination == ROOT_FOUND else None
    return RunResult(
        trace=trace,
        termination=termination,
        final_x=final_x.copy(),
        order_estimate=order,
        deltas_used=ladder.values if ladder is not None else None,
        beta_used=beta,
        method=method,
    )
