"""Runtime invariant checks over recorded runs.

Every check recomputes the step data at each traced iterate through the
public op layer (regularize_*, direction_*), independently of the fused
kernels the driver used, so a pass also certifies that the two routes agree.
"""

import math
from dataclasses import replace

import numpy as np

from .errors import NqnewtonError
from .problems import ANALYTIC, corpus, eval_f, half_hessian, hess_f, jacobian
from .solvers import (
    BRANCH_FULL,
    CRITICAL_NON_ROOT,
    DeltaLadder,
    ROOT_FOUND,
    RunResult,
    SolverConfig,
    direction_general,
    direction_lmm,
    direction_nqnse,
    regularize_lmm,
    regularize_nqnse,
    solve,
)
from .spectral import eigh

DESCENT_SLACK = 1e-15


def descent_ok(result: RunResult) -> bool:
    """f non-increasing along the trace, with float slack 1e-15*max(1, f)."""
    fs = [rec.f_val for rec in result.trace]
    return all(b <= a + DESCENT_SLACK * max(1.0, a) for a, b in zip(fs, fs[1:]))


def _step_data(problem, config, result, rec):
    """Recompute (gh, w, w_hat, minsp_a, scale) at a traced iterate via the
    public ops."""
    x = rec.x
    fx = problem.eval(x)
    norm_f = float(np.linalg.norm(fx))
    jac = jacobian(problem, x, ANALYTIC)
    gh = jac.T @ fx
    ladder = DeltaLadder(result.deltas_used)
    if config.method == "lm-m":
        amat, j, branch = regularize_lmm(jac.T @ jac, norm_f, ladder, config.tau)
        w, w_hat = direction_lmm(amat, gh)
    elif config.method == "general":
        bmat = hess_f(problem, x, ANALYTIC)
        scale = norm_f if rec.branch == BRANCH_FULL else norm_f**config.tau
        amat = bmat + ladder.values[rec.delta_index] * scale * np.eye(len(x))
        if config.basis == "eigen":
            basis = eigh(amat).eigenvectors
        else:
            basis = np.eye(len(x))
        w, w_hat = direction_general(amat, 2.0 * gh, basis, config.q)
    else:
        bmat = half_hessian(problem, x, ANALYTIC)
        amat, j, branch = regularize_nqnse(bmat, norm_f, ladder, config.tau)
        w, w_hat = direction_nqnse(amat, gh)
    vals, _ = eigh(amat)
    minsp_a = float(np.min(np.abs(vals)))
    scale = norm_f if rec.branch == BRANCH_FULL else norm_f**config.tau
    return gh, w, w_hat, minsp_a, scale, ladder


def check_run(problem, config: SolverConfig, result: RunResult):
    """Per-run invariant verdicts: list of (name, ok, detail)."""
    out = []
    out.append(("descent", descent_ok(result), f"{len(result.trace)} records"))

    floor_ok = True
    positivity_ok = True
    armijo_ok = True
    detail = ""
    for idx, rec in enumerate(result.trace):
        if rec.delta_index is None:
            continue
        gh, w, w_hat, minsp_a, scale, ladder = _step_data(problem, config, result, rec)
        if config.method in ("nqn-se", "general"):
            if minsp_a < ladder.kappa * scale * (1.0 - 1e-9):
                floor_ok = False
                detail = f"minsp {minsp_a:g} < kappa*scale {ladder.kappa * scale:g} at k={rec.k}"
        else:
            if minsp_a <= 0:
                floor_ok = False
                detail = f"operator not positive definite at k={rec.k}"
        wn = float(np.linalg.norm(w_hat))
        slope = float(np.dot(w_hat, gh))
        if wn > 1.0 + 1e-12 or (float(np.linalg.norm(gh)) > 0 and slope <= 0):
            positivity_ok = False
            detail = f"direction positivity failed at k={rec.k} (|w_hat|={wn:g}, slope={slope:g})"
        if rec.gamma > 0 and idx + 1 < len(result.trace):
            f_next = result.trace[idx + 1].f_val
            bound = rec.f_val - rec.gamma * slope
            if f_next > bound + 1e-9 * max(1.0, rec.f_val):
                armijo_ok = False
                detail = f"acceptance condition violated at k={rec.k}: {f_next:g} > {bound:g}"
    out.append(("regularization_floor", floor_ok, detail if not floor_ok else "ok"))
    out.append(("direction_positivity", positivity_ok, detail if not positivity_ok else "ok"))
    out.append(("armijo_postcondition", armijo_ok, detail if not armijo_ok else "ok"))

    if result.termination in (ROOT_FOUND, CRITICAL_NON_ROOT):
        fx = problem.eval(result.final_x)
        jac = jacobian(problem, result.final_x, ANALYTIC)
        ghn = float(np.linalg.norm(jac.T @ fx))
        bound = max(config.tol_crit, 1e-6)
        out.append(("criticality_of_limit", ghn <= bound, f"|H^T F|={ghn:g} <= {bound:g}"))
    return out


def run_invariant_sweep(seed: int = 0, starts_per_problem: int = 10):
    """Descent / floor / positivity / acceptance / criticality over seeded
    random starts for every corpus problem and each descent method.

    Returns a list of (group_name, ok, detail) tuples, one per invariant per
    method, aggregated over problems and starts.
    """
    rng = np.random.default_rng(seed)
    methods = ("nqn-se", "lm-m", "general")
    aggregate = {}
    for method in methods:
        for name in ("descent", "regularization_floor", "direction_positivity",
                     "armijo_postcondition", "criticality_of_limit"):
            aggregate[(method, name)] = [0, 0, "ok"]  # pass, total, worst detail
    for problem in corpus():
        for method in methods:
            config = SolverConfig(method=method, max_iter=300, rng_seed=seed)
            for _ in range(starts_per_problem):
                x0 = rng.uniform(-3.0, 3.0, size=problem.domain_dim)
                config_i = replace(config, rng_seed=int(rng.integers(2**31)))
                try:
                    result = solve(problem, config_i, x0)
                except NqnewtonError as exc:
                    key = (method, "descent")
                    aggregate[key][1] += 1
                    aggregate[key][2] = f"{problem.name}: solve raised {exc}"
                    continue
                for name, ok, detail in check_run(problem, config_i, result):
                    key = (method, name)
                    aggregate[key][1] += 1
                    aggregate[key][0] += 1 if ok else 0
                    if not ok:
                        aggregate[key][2] = f"{problem.name}: {detail}"
    report = []
    for (method, name), (passed, total, detail) in sorted(aggregate.items()):
        if total == 0:
            continue
        ok = passed == total
        report.append((f"{method}/{name}", ok, f"{passed}/{total} runs" if ok else detail))
    return report
