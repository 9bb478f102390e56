"""Equation systems and their derivatives.

A :class:`Problem` wraps an evaluator for ``F: R^m -> R^m'`` together with
optional analytic derivatives. All solvers work on the scalar merit function
``f(x) = ||F(x)||^2`` whose derivatives have closed forms in terms of the
Jacobian ``H(x) = JF(x)`` and the component Hessians:

    grad f(x) = 2 H(x)^T F(x)
    hess f(x) = 2 (H^T H + sum_i F_i(x) * hess F_i(x))

``grad_f`` always uses the exact product form (never finite differences of
``f``), because the solvers' acceptance conditions are stated in terms of
``H^T F``. Rectangular systems (m' != m) are first class: ``H^T H`` and
``hess f`` are m x m regardless.

The built-in corpus covers the behaviors the solvers are tested against:
non-degenerate roots, a strong saddle between two roots, a plain-Newton
attracting 2-cycle, polynomial 2D systems with known roots, and one
overdetermined system.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import EvaluationError, InvalidInput, MissingDerivative
from .spectral import symmetrize

__all__ = [
    "Problem",
    "DerivativeMode",
    "ANALYTIC",
    "CENTRAL_DIFFERENCE",
    "eval_f",
    "grad_f",
    "jacobian",
    "hess_f",
    "corpus",
    "corpus_by_name",
    "default_starts",
]

#: Step rule for central differences: h_i = cbrt(eps) * (1 + |x_i|).
_FD_BASE = float(np.cbrt(np.finfo(float).eps))


def _default_step_rule(x: np.ndarray) -> np.ndarray:
    return _FD_BASE * (1.0 + np.abs(x))


@dataclass(frozen=True)
class DerivativeMode:
    """How derivatives of F are obtained: the analytic evaluators when the
    problem ships them, or central finite differences with a positive
    per-coordinate step."""

    kind: str  # "analytic" | "central"
    step_rule: Callable[[np.ndarray], np.ndarray] = _default_step_rule


ANALYTIC = DerivativeMode("analytic")
CENTRAL_DIFFERENCE = DerivativeMode("central")


@dataclass(frozen=True)
class Problem:
    """An equation system F(x) = 0.

    Evaluators must be deterministic and side-effect-free; problems are
    immutable and safe to share across threads. ``known_roots`` is for
    diagnostics only and never consulted by the solvers.
    """

    name: str
    domain_dim: int
    codomain_dim: int
    F: Callable[[np.ndarray], np.ndarray]
    jacobian_analytic: Optional[Callable[[np.ndarray], np.ndarray]] = None
    component_hessians_analytic: Optional[Callable[[np.ndarray], Sequence[np.ndarray]]] = None
    known_roots: tuple = field(default=())

    @property
    def is_square(self) -> bool:
        return self.domain_dim == self.codomain_dim

    def eval(self, x) -> np.ndarray:
        """Evaluate F with shape and finiteness checks."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.domain_dim,):
            raise InvalidInput(
                f"{self.name}: x has shape {x.shape}, expected ({self.domain_dim},)"
            )
        out = np.asarray(self.F(x), dtype=float).reshape(-1)
        if out.shape != (self.codomain_dim,):
            raise EvaluationError(
                f"{self.name}: F returned shape {out.shape}, expected ({self.codomain_dim},)"
            )
        # sum() is nan when any entry is nan and +-inf when any entry
        # overflows, so one scalar check covers the whole vector cheaply
        if not math.isfinite(float(out.sum())):
            raise EvaluationError(f"{self.name}: F returned non-finite values at x={x}")
        return out


def eval_f(problem: Problem, x) -> float:
    """Merit function f(x) = ||F(x)||^2."""
    fx = problem.eval(x)
    return float(np.dot(fx, fx))


def jacobian(problem: Problem, x, mode: DerivativeMode = ANALYTIC) -> np.ndarray:
    """Jacobian H(x) = JF(x), shape (m', m).

    Analytic mode uses the problem's evaluator when present and otherwise
    falls back to central differences column by column.
    """
    x = np.asarray(x, dtype=float)
    if mode.kind == "analytic" and problem.jacobian_analytic is not None:
        jac = np.asarray(problem.jacobian_analytic(x), dtype=float)
        jac = jac.reshape(problem.codomain_dim, problem.domain_dim)
        if not math.isfinite(float(jac.sum())):
            raise EvaluationError(f"{problem.name}: Jacobian non-finite at x={x}")
        return jac
    steps = mode.step_rule(x)
    if np.any(steps <= 0):
        raise InvalidInput("finite-difference step rule produced a non-positive step")
    cols = []
    for i in range(problem.domain_dim):
        e = np.zeros(problem.domain_dim)
        e[i] = steps[i]
        cols.append((problem.eval(x + e) - problem.eval(x - e)) / (2.0 * steps[i]))
    return np.column_stack(cols)


def grad_f(problem: Problem, x, mode: DerivativeMode = ANALYTIC) -> np.ndarray:
    """Gradient of f via the exact product 2 H(x)^T F(x)."""
    fx = problem.eval(x)
    jac = jacobian(problem, x, mode)
    return 2.0 * (jac.T @ fx)


def grad_half(problem: Problem, x, mode: DerivativeMode = ANALYTIC) -> np.ndarray:
    """H(x)^T F(x), i.e. grad f / 2; the quantity the solvers work with."""
    fx = problem.eval(x)
    jac = jacobian(problem, x, mode)
    return jac.T @ fx


def hess_f(problem: Problem, x, mode: DerivativeMode = ANALYTIC) -> np.ndarray:
    """Hessian of f, exactly symmetric.

    Analytic mode: 2 (H^T H + sum_i F_i hess F_i), requiring the component
    Hessians. Central-difference mode: symmetrized differences of grad_f.
    """
    x = np.asarray(x, dtype=float)
    if mode.kind == "analytic":
        if problem.component_hessians_analytic is None:
            raise MissingDerivative(
                f"{problem.name}: component Hessians not provided; use central differences"
            )
        fx = problem.eval(x)
        jac = jacobian(problem, x, mode)
        acc = jac.T @ jac
        for fi, hi in zip(fx, problem.component_hessians_analytic(x)):
            acc = acc + fi * np.asarray(hi, dtype=float)
        return symmetrize(2.0 * acc)
    steps = mode.step_rule(x)
    if np.any(steps <= 0):
        raise InvalidInput("finite-difference step rule produced a non-positive step")
    m = problem.domain_dim
    cols = np.empty((m, m))
    for i in range(m):
        e = np.zeros(m)
        e[i] = steps[i]
        gp = grad_f(problem, x + e, mode)
        gm = grad_f(problem, x - e, mode)
        cols[:, i] = (gp - gm) / (2.0 * steps[i])
    return symmetrize(cols)


def half_hessian(problem: Problem, x, mode: DerivativeMode = ANALYTIC) -> np.ndarray:
    """H^T H + sum_i F_i hess F_i (= hess f / 2), the solvers' second-order
    operator; exactly symmetric."""
    if mode.kind == "analytic" and problem.component_hessians_analytic is not None:
        fx = problem.eval(x)
        jac = jacobian(problem, x, mode)
        acc = jac.T @ jac
        for fi, hi in zip(fx, problem.component_hessians_analytic(x)):
            acc = acc + fi * np.asarray(hi, dtype=float)
        return symmetrize(acc)
    return 0.5 * hess_f(problem, x, CENTRAL_DIFFERENCE)


def hessian_dot_f(problem: Problem, x, mode: DerivativeMode = ANALYTIC) -> np.ndarray:
    """sum_i F_i(x) * hess F_i(x); negative definiteness of this matrix is the
    strong-saddle test."""
    x = np.asarray(x, dtype=float)
    if mode.kind == "analytic" and problem.component_hessians_analytic is not None:
        fx = problem.eval(x)
        acc = np.zeros((problem.domain_dim, problem.domain_dim))
        for fi, hi in zip(fx, problem.component_hessians_analytic(x)):
            acc = acc + fi * np.asarray(hi, dtype=float)
        return symmetrize(acc)
    jac = jacobian(problem, x, CENTRAL_DIFFERENCE)
    return symmetrize(0.5 * hess_f(problem, x, CENTRAL_DIFFERENCE) - jac.T @ jac)


# ---------------------------------------------------------------------------
# Built-in corpus
# ---------------------------------------------------------------------------

_SQRT2 = math.sqrt(2.0)
_SQRT175 = math.sqrt(1.75)
#: Unique real root of x^3 - 2x + 2 (the polynomial with the classic plain
#: Newton 2-cycle 0 <-> 1), to full double precision.
NEWTON_CYCLE_ROOT = -1.7692923542386314


def _quad1d() -> Problem:
    return Problem(
        name="quad1d",
        domain_dim=1,
        codomain_dim=1,
        F=lambda x: np.array([x[0] ** 2 - 2.0]),
        jacobian_analytic=lambda x: np.array([[2.0 * x[0]]]),
        component_hessians_analytic=lambda x: [np.array([[2.0]])],
        known_roots=(np.array([_SQRT2]), np.array([-_SQRT2])),
    )


def _saddle1d() -> Problem:
    # Roots +-1; x = 0 is a strong generalized saddle of f = (1 - x^2)^2.
    return Problem(
        name="saddle1d",
        domain_dim=1,
        codomain_dim=1,
        F=lambda x: np.array([1.0 - x[0] ** 2]),
        jacobian_analytic=lambda x: np.array([[-2.0 * x[0]]]),
        component_hessians_analytic=lambda x: [np.array([[-2.0]])],
        known_roots=(np.array([1.0]), np.array([-1.0])),
    )


def _newton_cycle() -> Problem:
    # Plain Newton from 0 cycles 0 <-> 1 forever; the real root is unique.
    return Problem(
        name="newton_cycle",
        domain_dim=1,
        codomain_dim=1,
        F=lambda x: np.array([x[0] ** 3 - 2.0 * x[0] + 2.0]),
        jacobian_analytic=lambda x: np.array([[3.0 * x[0] ** 2 - 2.0]]),
        component_hessians_analytic=lambda x: [np.array([[6.0 * x[0]]])],
        known_roots=(np.array([NEWTON_CYCLE_ROOT]),),
    )


def _cubic2d() -> Problem:
    # Real form of z^3 - 1; roots are the cube roots of unity.
    def F(v):
        x, y = v
        return np.array([x**3 - 3.0 * x * y**2 - 1.0, 3.0 * x**2 * y - y**3])

    def J(v):
        x, y = v
        d = 3.0 * x**2 - 3.0 * y**2
        return np.array([[d, -6.0 * x * y], [6.0 * x * y, d]])

    def H(v):
        x, y = v
        return [
            np.array([[6.0 * x, -6.0 * y], [-6.0 * y, -6.0 * x]]),
            np.array([[6.0 * y, 6.0 * x], [6.0 * x, -6.0 * y]]),
        ]

    return Problem(
        name="cubic2d",
        domain_dim=2,
        codomain_dim=2,
        F=F,
        jacobian_analytic=J,
        component_hessians_analytic=H,
        known_roots=(
            np.array([1.0, 0.0]),
            np.array([-0.5, math.sqrt(3.0) / 2.0]),
            np.array([-0.5, -math.sqrt(3.0) / 2.0]),
        ),
    )


def _circles2d() -> Problem:
    # Intersection of two circles; subtracting the equations gives x = 3/2,
    # hence y^2 = 4 - 9/4 = 7/4.
    def F(v):
        x, y = v
        return np.array([x**2 + y**2 - 4.0, (x - 1.0) ** 2 + y**2 - 2.0])

    def J(v):
        x, y = v
        return np.array([[2.0 * x, 2.0 * y], [2.0 * (x - 1.0), 2.0 * y]])

    def H(v):
        return [2.0 * np.eye(2), 2.0 * np.eye(2)]

    return Problem(
        name="circles2d",
        domain_dim=2,
        codomain_dim=2,
        F=F,
        jacobian_analytic=J,
        component_hessians_analytic=H,
        known_roots=(np.array([1.5, _SQRT175]), np.array([1.5, -_SQRT175])),
    )


def _rosen_sys() -> Problem:
    # Rosenbrock in residual form; the unique root is (1, 1).
    def F(v):
        x, y = v
        return np.array([10.0 * (y - x**2), 1.0 - x])

    def J(v):
        x, y = v
        return np.array([[-20.0 * x, 10.0], [-1.0, 0.0]])

    def H(v):
        return [np.array([[-20.0, 0.0], [0.0, 0.0]]), np.zeros((2, 2))]

    return Problem(
        name="rosen_sys",
        domain_dim=2,
        codomain_dim=2,
        F=F,
        jacobian_analytic=J,
        component_hessians_analytic=H,
        known_roots=(np.array([1.0, 1.0]),),
    )


def _overdet() -> Problem:
    # Overdetermined: F: R -> R^2, unique root 0.
    return Problem(
        name="overdet",
        domain_dim=1,
        codomain_dim=2,
        F=lambda x: np.array([x[0], x[0] ** 2]),
        jacobian_analytic=lambda x: np.array([[1.0], [2.0 * x[0]]]),
        component_hessians_analytic=lambda x: [np.zeros((1, 1)), np.array([[2.0]])],
        known_roots=(np.array([0.0]),),
    )


def corpus() -> list:
    """The built-in test problems, in a fixed order."""
    return [
        _quad1d(),
        _saddle1d(),
        _newton_cycle(),
        _cubic2d(),
        _circles2d(),
        _rosen_sys(),
        _overdet(),
    ]


def corpus_by_name(name: str) -> Problem:
    for problem in corpus():
        if problem.name == name:
            return problem
    names = ", ".join(p.name for p in corpus())
    raise InvalidInput(f"unknown problem {name!r}; available: {names}")


def default_starts() -> dict:
    """Canonical initial points used by the CLI suite/rate drivers."""
    return {
        "quad1d": np.array([2.0]),
        "saddle1d": np.array([0.3]),
        "newton_cycle": np.array([0.0]),
        "cubic2d": np.array([1.4, 0.6]),
        "circles2d": np.array([2.0, 1.0]),
        "rosen_sys": np.array([-1.2, 1.0]),
        "overdet": np.array([0.5]),
    }
