"""Post-hoc and experimental verification of solver behavior.

Convergence-order estimation, classification of terminal points (roots vs
generalized/strong saddles vs non-root local minima), Monte-Carlo
saddle-escape experiments, step-size-one region checks near saddles, the
Hölder-conjugate criterion for the q-norm scheme, and basin-of-attraction
grids for 2D systems.
"""

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import solvers
from .errors import InsufficientData, InvalidInput, MissingDerivative, NotCritical
from .problems import ANALYTIC, CENTRAL_DIFFERENCE, Problem, hess_f, hessian_dot_f, jacobian
from .solvers import LineSearch, SolverConfig, random_ladder
from .spectral import eigh, is_negative_definite

__all__ = [
    "LimitClass",
    "Classification",
    "BasinGrid",
    "estimate_order",
    "classify_limit",
    "saddle_escape_mc",
    "EscapeSummary",
    "gamma_one_region_check",
    "holder_conjugate_ok",
    "basin_grid",
]

ROOT_NON_DEGENERATE = "RootNonDegenerate"
ROOT_DEGENERATE = "RootDegenerate"
SADDLE_STRONG = "SaddleStrong"
SADDLE_GENERALIZED = "SaddleGeneralized"
LOCAL_MIN_NON_ROOT = "LocalMinNonRoot"
UNCLASSIFIED = "Unclassified"

LimitClass = str  # one of the six constants above

_ORDER_WINDOW = (1e-13, 1e-2)


def estimate_order(errors: Sequence[float]) -> float:
    """Least-squares slope of log e_{k+1} against log e_k over the tail where
    e_k lies strictly inside (1e-13, 1e-2).

    The window discards the pre-asymptotic head and the float-noise floor;
    a slope of 2 is quadratic convergence, 1 is linear.
    """
    errs = [float(e) for e in errors]
    if len(errs) < 4:
        raise InsufficientData(f"need >= 4 error entries, got {len(errs)}")
    if any(b >= a for a, b in zip(errs, errs[1:])):
        raise InsufficientData("errors must be strictly decreasing")
    if errs[-1] <= 0:
        raise InsufficientData("final error must be positive")
    lo, hi = _ORDER_WINDOW
    pairs = [
        (math.log(a), math.log(b))
        for a, b in zip(errs, errs[1:])
        if lo < a < hi
    ]
    if len(pairs) < 2:
        raise InsufficientData(
            f"only {len(pairs)} error pairs fall inside the window {_ORDER_WINDOW}"
        )
    xs = np.array([p[0] for p in pairs])
    ys = np.array([p[1] for p in pairs])
    xc = xs - xs.mean()
    return float((xc @ (ys - ys.mean())) / (xc @ xc))


@dataclass(frozen=True)
class Classification:
    """A limit class plus the scalars it was decided on."""

    kind: LimitClass
    norm_f: float
    sigma_min_jac: float
    hess_eig_min: float
    hess_eig_max: float
    curvature_eig_min: float
    curvature_eig_max: float


def classify_limit(problem: Problem, x, tol_root: float = 1e-8,
                   tol_crit: float = 1e-6, eig_tol: float = 1e-8) -> Classification:
    """Classify an approximately critical point of f = ||F||^2.

    Roots split on Jacobian rank (non-degenerate iff the smallest singular
    value clears a scaled tolerance). Non-roots are strong saddles when
    sum_i F_i hess F_i is negative definite and hess f has a negative
    eigenvalue; generalized saddles when hess f has a negative eigenvalue;
    local minima when hess f is positive semidefinite within tolerance.

    Raises NotCritical when ||H^T F(x)|| > tol_crit.
    """
    x = np.asarray(x, dtype=float)
    fx = problem.eval(x)
    norm_f = float(np.linalg.norm(fx))
    jac = jacobian(problem, x, ANALYTIC)
    gh_norm = float(np.linalg.norm(jac.T @ fx))
    if gh_norm > tol_crit:
        raise NotCritical(
            f"||H^T F|| = {gh_norm:g} > {tol_crit:g}; not an approximate critical point"
        )
    sigma_min = float(np.linalg.svd(jac, compute_uv=False)[-1])
    try:
        hess = hess_f(problem, x, ANALYTIC)
        curv = hessian_dot_f(problem, x, ANALYTIC)
    except MissingDerivative:
        hess = hess_f(problem, x, CENTRAL_DIFFERENCE)
        curv = hessian_dot_f(problem, x, CENTRAL_DIFFERENCE)
    hess_vals, _ = eigh(hess)
    curv_vals, _ = eigh(curv)
    scales = Classification(
        kind=UNCLASSIFIED,
        norm_f=norm_f,
        sigma_min_jac=sigma_min,
        hess_eig_min=float(hess_vals[0]),
        hess_eig_max=float(hess_vals[-1]),
        curvature_eig_min=float(curv_vals[0]),
        curvature_eig_max=float(curv_vals[-1]),
    )
    if norm_f <= tol_root:
        rank_tol = eig_tol * max(1.0, float(np.linalg.norm(jac)))
        kind = ROOT_NON_DEGENERATE if sigma_min > rank_tol else ROOT_DEGENERATE
        return replace(scales, kind=kind)
    hess_scale = eig_tol * max(1.0, float(np.linalg.norm(hess_vals)))
    curv_scale = eig_tol * max(1.0, float(np.linalg.norm(curv_vals)))
    has_negative = hess_vals[0] < -hess_scale
    if has_negative and is_negative_definite(curv, curv_scale):
        return replace(scales, kind=SADDLE_STRONG)
    if has_negative:
        return replace(scales, kind=SADDLE_GENERALIZED)
    if hess_vals[0] >= -hess_scale:
        return replace(scales, kind=LOCAL_MIN_NON_ROOT)
    return scales


@dataclass(frozen=True)
class EscapeSummary:
    trials: int
    escapes: int
    stuck_at_center: int
    termination_counts: dict
    limit_counts: dict


def saddle_escape_mc(problem: Problem, x_center, radius: float, trials: int,
                     config_template: SolverConfig) -> EscapeSummary:
    """Monte-Carlo escape experiment around a (saddle) point.

    Each trial draws a uniform start in the ball, a fresh random shift
    ladder, and (for the beta-grid policy) a fresh beta, all from a RNG
    seeded by (config seed, trial index). A trial counts as stuck when it
    ends within 1e-4 of the center; everything else is an escape.
    """
    if trials < 1:
        raise InvalidInput("trials must be >= 1")
    center = np.asarray(x_center, dtype=float).reshape(-1)
    m = problem.domain_dim
    ladder_len = 2 if config_template.method == "lm-m" else m + 1
    escapes = stuck = 0
    term_counts: dict = {}
    limit_counts: dict = {}
    for trial in range(trials):
        rng = np.random.default_rng([config_template.rng_seed, trial])
        while True:
            offset = rng.uniform(-radius, radius, size=m)
            if 0 < float(np.linalg.norm(offset)) <= radius:
                break
        cfg = replace(
            config_template,
            deltas=random_ladder(rng, ladder_len),
            rng_seed=int(rng.integers(2**31)),
        )
        result = solvers.solve(problem, cfg, center + offset)
        term_counts[result.termination] = term_counts.get(result.termination, 0) + 1
        if float(np.linalg.norm(result.final_x - center)) <= 1e-4:
            stuck += 1
        else:
            escapes += 1
        try:
            kind = classify_limit(problem, result.final_x).kind
        except NotCritical:
            kind = "NotCritical"
        limit_counts[kind] = limit_counts.get(kind, 0) + 1
    return EscapeSummary(
        trials=trials,
        escapes=escapes,
        stuck_at_center=stuck,
        termination_counts=term_counts,
        limit_counts=limit_counts,
    )


def gamma_one_region_check(problem: Problem, x_star, radius: float, samples: int,
                           config: SolverConfig, tol_root: float = 1e-10,
                           tol_crit: float = 1e-8) -> float:
    """Fraction of sampled points near a non-root critical point where the
    full step gamma = 1 passes the acceptance test.

    Samples with ||H^T F|| <= tol_crit are excluded (the direction is not
    defined there). Raises NotCritical when x_star is not a non-root critical
    point, InsufficientData when every sample is excluded.
    """
    center = np.asarray(x_star, dtype=float).reshape(-1)
    fx = problem.eval(center)
    if float(np.linalg.norm(fx)) <= tol_root:
        raise NotCritical("x_star is a root; the gamma=1 region test needs a non-root critical point")
    jac = jacobian(problem, center, ANALYTIC)
    if float(np.linalg.norm(jac.T @ fx)) > tol_crit:
        raise NotCritical("x_star is not an approximate critical point")

    config.validate(problem)
    m = problem.domain_dim
    rng = np.random.default_rng(config.rng_seed)
    ladder = config.deltas
    if ladder is None:
        ladder = random_ladder(rng, 2 if config.method == "lm-m" else m + 1)
    deltas_arr = np.asarray(ladder.values)

    from . import _kernels
    from .problems import eval_f, half_hessian

    accepted = usable = 0
    for _ in range(samples):
        x = center + rng.uniform(-radius, radius, size=m)
        fx = problem.eval(x)
        norm_f = float(np.linalg.norm(fx))
        jac = jacobian(problem, x, ANALYTIC)
        gh = jac.T @ fx
        if float(np.linalg.norm(gh)) <= tol_crit or norm_f <= tol_root:
            continue
        if config.method == "lm-m":
            w, _, _ = _kernels.lmm_direction(
                np.ascontiguousarray(jac.T @ jac), gh, norm_f,
                ladder.values[0], ladder.values[1], config.tau,
            )
        elif config.method == "general":
            bmat = hess_f(problem, x, ANALYTIC)
            w, _, _, _ = _kernels.general_direction(
                np.ascontiguousarray(bmat), 2.0 * gh, norm_f, deltas_arr,
                config.tau, ladder.kappa, config.q, config.basis == "eigen",
            )
        else:
            bmat = half_hessian(problem, x, ANALYTIC)
            w, _, _, _ = _kernels.nqnse_direction(
                np.ascontiguousarray(bmat), gh, norm_f, deltas_arr,
                config.tau, ladder.kappa,
            )
        w = np.asarray(w)
        w_hat = w / max(1.0, float(np.linalg.norm(w)))
        usable += 1
        f0 = norm_f * norm_f
        f1 = eval_f(problem, x - w_hat)
        if f1 - f0 <= -float(np.dot(w_hat, gh)):
            accepted += 1
    if usable == 0:
        raise InsufficientData("every sample was excluded by the criticality filter")
    return accepted / usable


def holder_conjugate_ok(q: float, m: int) -> bool:
    """Whether the Hölder conjugate p of q satisfies m^(1/p) < 4/3, the
    hypothesis under which the q-norm scheme accepts gamma = 1 near saddles
    (q = 1 gives p = infinity, hence m^0 = 1, always fine)."""
    if q < 1:
        raise InvalidInput(f"q must be >= 1 (got {q})")
    if q == 1:
        return True
    p = q / (q - 1.0)
    return m ** (1.0 / p) < 4.0 / 3.0


@dataclass(frozen=True)
class BasinGrid:
    """Per-cell root assignment for a rectangle of starts.

    root_index[iy, ix] is the index into `roots` of the converged root
    (within 1e-6), or -1; iters holds the trace length of each run.
    """

    bounds: tuple  # (xmin, xmax, ymin, ymax)
    nx: int
    ny: int
    root_index: np.ndarray
    iters: np.ndarray


def basin_grid(problem: Problem, rect, resolution, config: SolverConfig,
               roots: Sequence) -> BasinGrid:
    """Solve from every cell center of a rectangular grid and assign each
    cell to the nearest root (within 1e-6) of its final iterate.

    Deterministic given the config seed; cells are independent runs.
    """
    if problem.domain_dim != 2 or problem.codomain_dim != 2:
        raise InvalidInput("basin_grid requires a 2D square system")
    roots = [np.asarray(r, dtype=float) for r in roots]
    if not roots:
        raise InvalidInput("basin_grid requires a non-empty root list")
    xmin, xmax, ymin, ymax = (float(v) for v in rect)
    nx, ny = (int(v) for v in resolution)
    if nx < 1 or ny < 1:
        raise InvalidInput("resolution must be positive")
    if config.deltas is None and config.method != "newton":
        # materialize the seed-drawn ladder once instead of per cell
        rng = np.random.default_rng(config.rng_seed)
        count = 2 if config.method == "lm-m" else problem.domain_dim + 1
        config = replace(config, deltas=random_ladder(rng, count))
    dx = (xmax - xmin) / nx
    dy = (ymax - ymin) / ny
    root_index = np.full((ny, nx), -1, dtype=np.int32)
    iters = np.zeros((ny, nx), dtype=np.int32)
    for iy in range(ny):
        y = ymin + (iy + 0.5) * dy
        for ix in range(nx):
            x = xmin + (ix + 0.5) * dx
            result = solvers.solve(problem, config, np.array([x, y]))
            iters[iy, ix] = len(result.trace)
            dists = [float(np.linalg.norm(result.final_x - r)) for r in roots]
            best = int(np.argmin(dists))
            if dists[best] <= 1e-6:
                root_index[iy, ix] = best
    return BasinGrid(bounds=(xmin, xmax, ymin, ymax), nx=nx, ny=ny,
                     root_index=root_index, iters=iters)
