#!/usr/bin/env python3
"""Compare the compiled kernel backend against the pure-numpy fallback.

Micro-benchmarks call both backends' functions directly; the end-to-end rows
time a small basin-of-attraction run in a subprocess with the backend forced
through NQNEWTON_PURE_PYTHON.

Run:  python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from nqnewton._kernels import available_backends  # noqa: E402


def _sym(rng, m):
    a = rng.normal(size=(m, m))
    return np.ascontiguousarray(0.5 * (a + a.T))


def time_call(fn, *args, repeat=20000):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return 1e6 * (time.perf_counter() - t0) / repeat


def micro_rows():
    rng = np.random.default_rng(42)
    backends = available_backends()
    deltas = {m: np.linspace(1.0, 2.0, m + 1) for m in (2, 3, 8)}
    rows = []
    for m in (2, 3, 8):
        a = _sym(rng, m)
        gh = rng.normal(size=m)
        hth = np.ascontiguousarray(a @ a.T)
        repeat = 20000 if m <= 3 else 5000
        for op, call in (
            ("sym_eigh", lambda mod: time_call(mod.sym_eigh, a, repeat=repeat)),
            ("nqnse_direction", lambda mod: time_call(
                mod.nqnse_direction, a, gh, 0.7, deltas[m], 0.5, 0.25, repeat=repeat)),
            ("lmm_direction", lambda mod: time_call(
                mod.lmm_direction, hth, gh, 0.7, 1.0, 2.0, 0.5, repeat=repeat)),
            ("general_direction", lambda mod: time_call(
                mod.general_direction, a, gh, 0.7, deltas[m], 0.5, 0.25, 1.0, False,
                repeat=repeat)),
        ):
            timing = {name: call(mod) for name, mod in backends.items()}
            rows.append((f"{op} (m={m})", timing))
    return rows


_E2E_SNIPPET = """
import time
import nqnewton as nq
from nqnewton.diagnostics import basin_grid
p = nq.corpus_by_name("cubic2d")
cfg = nq.SolverConfig(method="nqn-se", max_iter=300, deltas=nq.even_ladder(3))
t0 = time.perf_counter()
basin_grid(p, (-2, 2, -2, 2), (41, 41), cfg, p.known_roots)
print(nq.BACKEND, time.perf_counter() - t0)
"""


def e2e_row():
    timing = {}
    for env_extra in ({}, {"NQNEWTON_PURE_PYTHON": "1"}):
        out = subprocess.run(
            [sys.executable, "-c", _E2E_SNIPPET],
            env={**os.environ, **env_extra},
            capture_output=True,
            text=True,
            check=True,
        )
        name, seconds = out.stdout.split()
        timing[name] = float(seconds) * 1e6  # report in us for a uniform table
    return ("basin 41x41 cubic2d (end-to-end, us total)", timing)


def main():
    rows = micro_rows()
    backends = sorted(rows[0][1])
    try:
        rows.append(e2e_row())
    except subprocess.CalledProcessError as exc:
        print("end-to-end row skipped:", exc.stderr, file=sys.stderr)

    width = max(len(r[0]) for r in rows) + 2
    header = "kernel".ljust(width) + "".join(f"{b:>14}" for b in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, timing in rows:
        line = name.ljust(width)
        for b in backends:
            line += f"{timing.get(b, float('nan')):>12.2f}us"
        if "compiled" in timing and "python" in timing:
            line += f"{timing['python'] / timing['compiled']:>9.1f}x"
        print(line)
    if len(backends) == 1:
        print("\n(compiled extension not built; only the python backend is present)")


if __name__ == "__main__":
    main()
