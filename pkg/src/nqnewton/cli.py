"""Command-line front end.

Subcommands:

  solve      one run: trace CSV + summary JSON
  suite      all corpus problems x selected methods, summary table
  basin      2D basin-of-attraction grid: plain-text PGM (P2) + cell CSV
  mc-saddle  Monte-Carlo saddle-escape experiment, JSON summary
  rate       convergence-order estimates per problem
  check      runtime invariant sweep (descent, floors, positivity, Armijo)

Exit codes: 0 success, 1 configuration error, 2 runtime failure. All
randomness is seeded (default 0) and the seed is echoed into every summary;
identical argv produce byte-identical outputs. A JSON config file may supply
any flag value (flag spelling without the leading dashes, dashes as
underscores); explicit flags win.
"""

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .diagnostics import basin_grid, estimate_order, saddle_escape_mc
from .errors import ConfigError, InvalidInput, NqnewtonError
from .problems import corpus, corpus_by_name, default_starts
from .solvers import (
    DeltaLadder,
    LineSearch,
    METHODS,
    SolverConfig,
    solve,
)

TRACE_COLUMNS = ("k", "f", "grad_half_norm", "delta_index", "branch", "minsp_A", "gamma", "step_norm")


def _parse_reals(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"could not parse comma-separated reals from {text!r}") from exc


def _problem(name: str):
    try:
        return corpus_by_name(name)
    except InvalidInput as exc:
        raise ConfigError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nqnewton",
        description="Regularized Newton-type solvers for nonlinear systems F(x)=0.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, problem_required=True):
        p.add_argument("--problem", required=False, help="corpus problem name")
        p.add_argument("--method", choices=METHODS, default="nqn-se")
        p.add_argument("--x0", help="comma-separated reals")
        p.add_argument("--tau", type=float, default=0.5)
        p.add_argument("--deltas", help="comma-separated shift ladder, or 'random'")
        p.add_argument("--line-search", choices=("halving", "beta-grid", "hybrid"), default="halving")
        p.add_argument("--beta", type=float, help="beta-grid ratio in (0,1); drawn from the seed when omitted")
        p.add_argument("--eta", type=float, help="hybrid gate contraction factor in (0,1)")
        p.add_argument("--det-eps", type=float, help="Jacobian-determinant guard threshold (square systems)")
        p.add_argument("--q", type=float, default=1.0, help="q-norm exponent (general method)")
        p.add_argument("--basis", choices=("standard", "eigen"), default="standard")
        p.add_argument("--tol-root", type=float, default=1e-10)
        p.add_argument("--tol-crit", type=float, default=1e-8)
        p.add_argument("--max-iter", type=int, default=10000)
        p.add_argument("--allow-large-tau", action="store_true", help="permit tau >= 1")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output directory (default: current)")
        p.add_argument("--config", help="JSON file with flag defaults")

    p_solve = sub.add_parser("solve", help="run one problem from one start")
    add_common(p_solve)

    p_suite = sub.add_parser("suite", help="all corpus problems x methods")
    add_common(p_suite)
    p_suite.add_argument("--methods", default="nqn-se,lm-m", help="comma-separated method list")

    p_basin = sub.add_parser("basin", help="basin-of-attraction grid (2D problems)")
    add_common(p_basin)
    p_basin.add_argument("--xmin", type=float, default=-2.0)
    p_basin.add_argument("--xmax", type=float, default=2.0)
    p_basin.add_argument("--ymin", type=float, default=-2.0)
    p_basin.add_argument("--ymax", type=float, default=2.0)
    p_basin.add_argument("--nx", type=int, default=201)
    p_basin.add_argument("--ny", type=int, default=201)

    p_mc = sub.add_parser("mc-saddle", help="Monte-Carlo saddle-escape experiment")
    add_common(p_mc)
    p_mc.add_argument("--center", default="0.0", help="comma-separated center point")
    p_mc.add_argument("--radius", type=float, default=0.05)
    p_mc.add_argument("--trials", type=int, default=100)

    p_rate = sub.add_parser("rate", help="convergence-order estimates")
    add_common(p_rate)
    p_rate.add_argument("--methods", default="nqn-se,lm-m")
    p_rate.add_argument("--problems", default="quad1d,cubic2d,circles2d")

    p_check = sub.add_parser("check", help="runtime invariant sweep")
    add_common(p_check)
    p_check.add_argument("--starts", type=int, default=10, help="random starts per problem")

    return parser


def _apply_config_file(args: argparse.Namespace, argv: list) -> None:
    """Fill args from a JSON config file; explicit flags keep priority."""
    if not args.config:
        return
    with open(args.config) as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise ConfigError("config: top-level JSON value must be an object")
    given = set()
    for token in argv:
        if token.startswith("--"):
            given.add(token[2:].split("=", 1)[0].replace("-", "_"))
    for key, value in data.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise ConfigError(f"config: unknown field {key!r}")
        if dest not in given:
            setattr(args, dest, value)


def _solver_config(args: argparse.Namespace, problem) -> SolverConfig:
    deltas = None
    if args.deltas and args.deltas != "random":
        deltas = DeltaLadder(tuple(_parse_reals(args.deltas)))
    ls = LineSearch(
        kind=args.line_search,
        beta=args.beta,
        eta=args.eta,
        inner="beta-grid" if (args.line_search == "hybrid" and args.beta is not None) else "halving",
    )
    config = SolverConfig(
        method=args.method,
        deltas=deltas,
        tau=args.tau,
        line_search=ls,
        det_guard=args.det_eps,
        q=args.q,
        basis=args.basis,
        tol_root=args.tol_root,
        tol_crit=args.tol_crit,
        max_iter=args.max_iter,
        rng_seed=args.seed,
        allow_tau_ge_1=args.allow_large_tau,
    )
    config.validate(problem)
    return config


def _out_dir(args) -> Path:
    out = Path(args.out) if args.out else Path.cwd()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt(value) -> str:
    """Deterministic field formatting for CSV output."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_trace_csv(path: Path, result, dim: int) -> None:
    cols = ["k"] + [f"x{i}" for i in range(dim)] + list(TRACE_COLUMNS[1:])
    lines = [",".join(cols)]
    for rec in result.trace:
        row = [str(rec.k)]
        row += [repr(float(v)) for v in rec.x]
        row += [
            _fmt(rec.f_val),
            _fmt(rec.grad_half_norm),
            _fmt(rec.delta_index),
            _fmt(rec.branch),
            _fmt(rec.minsp_a),
            _fmt(rec.gamma),
            _fmt(rec.step_norm),
        ]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def _summary_dict(args, problem, config, result) -> dict:
    return {
        "problem": problem.name,
        "method": config.method,
        "seed": config.rng_seed,
        "backend": BACKEND,
        "x0": _parse_reals(args.x0) if args.x0 else [float(v) for v in default_starts()[problem.name]],
        "termination": result.termination,
        "final_x": [float(v) for v in result.final_x],
        "f_final": result.trace[-1].f_val,
        "grad_half_norm_final": result.trace[-1].grad_half_norm,
        "iterations": len(result.trace),
        "order_estimate": result.order_estimate,
        "tau": config.tau,
        "deltas": list(result.deltas_used) if result.deltas_used else None,
        "beta": result.beta_used,
        "line_search": config.line_search.kind,
        "eta": config.line_search.eta,
        "det_eps": config.det_guard,
        "q": config.q,
        "basis": config.basis,
        "tol_root": config.tol_root,
        "tol_crit": config.tol_crit,
        "max_iter": config.max_iter,
    }


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n")


def _cmd_solve(args) -> int:
    problem = _problem(args.problem)
    config = _solver_config(args, problem)
    if args.x0:
        x0 = _parse_reals(args.x0)
    else:
        x0 = default_starts()[problem.name]
    result = solve(problem, config, x0)
    out = _out_dir(args)
    _write_trace_csv(out / f"trace_{problem.name}_{config.method}.csv", result, problem.domain_dim)
    summary = _summary_dict(args, problem, config, result)
    _write_json(out / f"summary_{problem.name}_{config.method}.json", summary)
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_suite(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"methods: unknown method {m!r}")
    starts = default_starts()
    rows = []
    for problem in corpus():
        for method in methods:
            if method == "newton" and not problem.is_square:
                continue
            run_args = argparse.Namespace(**vars(args))
            run_args.method = method
            config = _solver_config(run_args, problem)
            result = solve(problem, config, starts[problem.name])
            rows.append(
                (
                    problem.name,
                    method,
                    result.termination,
                    len(result.trace),
                    result.trace[-1].f_val,
                    result.order_estimate,
                )
            )
    header = f"{'problem':<14}{'method':<10}{'termination':<20}{'iters':>6}  {'f_final':>12}  {'order':>6}"
    print(header)
    print("-" * len(header))
    for name, method, term, iters, f_final, order in rows:
        order_s = f"{order:.2f}" if order is not None else "-"
        print(f"{name:<14}{method:<10}{term:<20}{iters:>6}  {f_final:>12.3e}  {order_s:>6}")
    out = _out_dir(args)
    payload = {
        "seed": args.seed,
        "backend": BACKEND,
        "rows": [
            {
                "problem": r[0],
                "method": r[1],
                "termination": r[2],
                "iterations": r[3],
                "f_final": r[4],
                "order_estimate": r[5],
            }
            for r in rows
        ],
    }
    _write_json(out / "suite_summary.json", payload)
    return 0


def _write_pgm(path: Path, grid) -> None:
    maxval = max(1, int(grid.root_index.max()) + 1)
    lines = ["P2", f"{grid.nx} {grid.ny}", str(maxval)]
    # top row = largest y, conventional image orientation
    for iy in range(grid.ny - 1, -1, -1):
        lines.append(" ".join(str(int(v) + 1) for v in grid.root_index[iy]))
    path.write_text("\n".join(lines) + "\n")


def _cmd_basin(args) -> int:
    problem = _problem(args.problem)
    if problem.domain_dim != 2 or problem.codomain_dim != 2:
        raise ConfigError(f"problem: basin rendering needs a 2D square system, not {problem.name}")
    if not problem.known_roots:
        raise ConfigError(f"problem: {problem.name} has no known roots to map")
    if args.max_iter == 10000:
        # rendering cap: cells that have not settled in 300 steps are holes
        args.max_iter = 300
    config = _solver_config(args, problem)
    rect = (args.xmin, args.xmax, args.ymin, args.ymax)
    started = time.perf_counter()
    grid = basin_grid(problem, rect, (args.nx, args.ny), config, problem.known_roots)
    elapsed = time.perf_counter() - started
    out = _out_dir(args)
    base = f"basin_{problem.name}_{config.method}"
    _write_pgm(out / f"{base}.pgm", grid)
    lines = ["ix,iy,root_index,iters"]
    for iy in range(grid.ny):
        for ix in range(grid.nx):
            lines.append(f"{ix},{iy},{int(grid.root_index[iy, ix])},{int(grid.iters[iy, ix])}")
    (out / f"{base}.csv").write_text("\n".join(lines) + "\n")
    counts = {int(k): int(v) for k, v in zip(*np.unique(grid.root_index, return_counts=True))}
    summary = {
        "problem": problem.name,
        "method": config.method,
        "seed": config.rng_seed,
        "backend": BACKEND,
        "rect": list(rect),
        "resolution": [grid.nx, grid.ny],
        "cell_counts_by_root": {str(k): v for k, v in sorted(counts.items())},
        "elapsed_seconds": round(elapsed, 3),
        "deltas": list(config.deltas.values) if config.deltas else None,
    }
    _write_json(out / f"{base}.json", summary)
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_mc_saddle(args) -> int:
    problem = _problem(args.problem)
    config = _solver_config(args, problem)
    if args.max_iter == 10000:
        config = replace(config, max_iter=2000)
    center = _parse_reals(args.center)
    summary = saddle_escape_mc(problem, center, args.radius, args.trials, config)
    payload = {
        "problem": problem.name,
        "method": config.method,
        "line_search": config.line_search.kind,
        "seed": config.rng_seed,
        "backend": BACKEND,
        "center": center,
        "radius": args.radius,
        "trials": summary.trials,
        "escapes": summary.escapes,
        "stuck_at_center": summary.stuck_at_center,
        "terminations": dict(sorted(summary.termination_counts.items())),
        "limit_classes": dict(sorted(summary.limit_counts.items())),
    }
    out = _out_dir(args)
    _write_json(out / f"mc_saddle_{problem.name}_{config.method}.json", payload)
    print(json.dumps(payload, indent=2))
    return 0


def _cmd_rate(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    names = [n.strip() for n in args.problems.split(",") if n.strip()]
    starts = default_starts()
    rows = []
    for name in names:
        problem = _problem(name)
        if not problem.known_roots:
            raise ConfigError(f"problems: {name} has no known roots")
        for method in methods:
            run_args = argparse.Namespace(**vars(args))
            run_args.method = method
            config = _solver_config(run_args, problem)
            result = solve(problem, config, starts[name])
            root = min(
                problem.known_roots,
                key=lambda r: float(np.linalg.norm(result.final_x - r)),
            )
            errors = [float(np.linalg.norm(rec.x - root)) for rec in result.trace]
            tail = []
            for e in reversed(errors):
                if e <= 0 or (tail and e <= tail[-1]):
                    break
                tail.append(e)
            tail.reverse()
            try:
                order = estimate_order(tail)
            except NqnewtonError:
                order = None
            rows.append({
                "problem": name,
                "method": method,
                "termination": result.termination,
                "iterations": len(result.trace),
                "order_estimate": order,
                "final_error": errors[-1],
            })
    for row in rows:
        order_s = f"{row['order_estimate']:.3f}" if row["order_estimate"] is not None else "-"
        print(f"{row['problem']:<12}{row['method']:<10}order={order_s:<8} "
              f"iters={row['iterations']:<5} err={row['final_error']:.2e} ({row['termination']})")
    _write_json(_out_dir(args) / "rate_summary.json", {"seed": args.seed, "rows": rows})
    return 0


def _cmd_check(args) -> int:
    from .checks import run_invariant_sweep

    report = run_invariant_sweep(seed=args.seed, starts_per_problem=args.starts)
    failures = 0
    for name, ok, detail in report:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failures += 0 if ok else 1
    print(f"{len(report) - failures}/{len(report)} invariant groups passed")
    return 0 if failures == 0 else 2


_COMMANDS = {
    "solve": _cmd_solve,
    "suite": _cmd_suite,
    "basin": _cmd_basin,
    "mc-saddle": _cmd_mc_saddle,
    "rate": _cmd_rate,
    "check": _cmd_check,
}

_NEEDS_PROBLEM = ("solve", "basin", "mc-saddle")


def run_cli(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config_file(args, argv)
        if args.command in _NEEDS_PROBLEM and not args.problem:
            raise ConfigError("problem: required for this subcommand")
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NqnewtonError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())
