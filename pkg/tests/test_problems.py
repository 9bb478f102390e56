"""Problem evaluators, derivative plumbing, and the built-in corpus."""

import numpy as np
import pytest

from nqnewton import errors
from nqnewton.problems import (
    ANALYTIC,
    CENTRAL_DIFFERENCE,
    NEWTON_CYCLE_ROOT,
    Problem,
    corpus,
    corpus_by_name,
    default_starts,
    eval_f,
    grad_f,
    hess_f,
    hessian_dot_f,
    jacobian,
)
from nqnewton.solvers import newton_baseline_step


def scalar_problem(f, df=None, d2f=None, name="scalar"):
    return Problem(
        name=name,
        domain_dim=1,
        codomain_dim=1,
        F=lambda x: np.array([f(x[0])]),
        jacobian_analytic=(lambda x: np.array([[df(x[0])]])) if df else None,
        component_hessians_analytic=(lambda x: [np.array([[d2f(x[0])]])]) if d2f else None,
    )


QUADM1 = scalar_problem(lambda x: x * x - 1.0, lambda x: 2.0 * x, lambda x: 2.0)
IDENTITY2 = Problem(
    name="identity2",
    domain_dim=2,
    codomain_dim=2,
    F=lambda x: x.copy(),
    jacobian_analytic=lambda x: np.eye(2),
    component_hessians_analytic=lambda x: [np.zeros((2, 2)), np.zeros((2, 2))],
)


# ---------------------------------------------------------------------------
# eval_f / grad_f
# ---------------------------------------------------------------------------

def test_eval_f_scalar():
    # F(x) = x^2 - 1 at x=2: F=3, f=9
    assert eval_f(QUADM1, [2.0]) == pytest.approx(9.0)


def test_eval_f_at_root_is_zero():
    p = corpus_by_name("quad1d")
    for root in p.known_roots:
        assert eval_f(p, root) <= 1e-25


def test_eval_f_identity_map():
    assert eval_f(IDENTITY2, [1.0, 2.0]) == pytest.approx(5.0)


def test_grad_f_scalar():
    # H=4, F=3 -> grad = 2*4*3 = 24
    assert grad_f(QUADM1, [2.0]) == pytest.approx([24.0])


def test_grad_f_zero_at_root():
    p = corpus_by_name("quad1d")
    assert np.linalg.norm(grad_f(p, p.known_roots[0])) <= 1e-12


def test_grad_f_identity_map():
    assert np.allclose(grad_f(IDENTITY2, [1.0, 2.0]), [2.0, 4.0])


def test_eval_error_on_non_finite():
    bad = Problem("bad", 1, 1, F=lambda x: np.array([np.nan]))
    with pytest.raises(errors.EvaluationError):
        eval_f(bad, [0.0])


# ---------------------------------------------------------------------------
# jacobian
# ---------------------------------------------------------------------------

def test_jacobian_scalar():
    assert jacobian(QUADM1, [2.0]) == pytest.approx([[4.0]])


def test_jacobian_linear_map_is_constant():
    a = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    p = Problem("linear", 2, 3, F=lambda x: a @ x)
    rng = np.random.default_rng(2)
    for _ in range(5):
        x = rng.normal(size=2)
        assert np.allclose(jacobian(p, x, CENTRAL_DIFFERENCE), a, atol=1e-7)


def test_jacobian_fd_matches_analytic_derivative():
    cube = Problem("cube", 1, 1, F=lambda x: np.array([x[0] ** 3]))
    assert jacobian(cube, [1.0], CENTRAL_DIFFERENCE)[0, 0] == pytest.approx(3.0, abs=1e-8)


# ---------------------------------------------------------------------------
# hess_f
# ---------------------------------------------------------------------------

def test_hess_f_scalar():
    # f = (x^2-1)^2, f'' = 12x^2 - 4 = 44 at x=2; also 2*(H^2 + F*2) = 2*(16+6)
    assert hess_f(QUADM1, [2.0]) == pytest.approx([[44.0]])


def test_hess_f_negative_at_saddle():
    p = corpus_by_name("saddle1d")
    # f = (1-x^2)^2, f''(0) = -4
    assert hess_f(p, [0.0]) == pytest.approx([[-4.0]])


def test_hess_f_linear_map():
    a = np.array([[1.0, 2.0], [0.0, 1.0]])
    p = Problem(
        "lin", 2, 2,
        F=lambda x: a @ x,
        jacobian_analytic=lambda x: a,
        component_hessians_analytic=lambda x: [np.zeros((2, 2)), np.zeros((2, 2))],
    )
    rng = np.random.default_rng(0)
    for _ in range(3):
        x = rng.normal(size=2)
        assert np.allclose(hess_f(p, x), 2.0 * a.T @ a, atol=1e-12)


def test_hess_f_requires_component_hessians():
    p = scalar_problem(lambda x: x * x, lambda x: 2 * x)  # no hessians
    with pytest.raises(errors.MissingDerivative):
        hess_f(p, [1.0], ANALYTIC)


def test_hess_f_exactly_symmetric():
    rng = np.random.default_rng(8)
    for p in corpus():
        x = rng.normal(size=p.domain_dim)
        for mode in (ANALYTIC, CENTRAL_DIFFERENCE):
            h = hess_f(p, x, mode)
            assert np.array_equal(h, h.T)


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------

def test_corpus_names_and_shapes():
    problems = corpus()
    assert [p.name for p in problems] == [
        "quad1d", "saddle1d", "newton_cycle", "cubic2d", "circles2d", "rosen_sys", "overdet",
    ]
    starts = default_starts()
    for p in problems:
        assert p.name in starts
        fx = p.eval(starts[p.name])
        assert fx.shape == (p.codomain_dim,)
        for root in p.known_roots:
            assert eval_f(p, root) <= 1e-20


def test_circles2d_roots_hand_derived():
    # subtracting the circle equations: 2x - 1 = 2 -> x = 1.5, y^2 = 4 - 2.25
    p = corpus_by_name("circles2d")
    ys = sorted(float(r[1]) for r in p.known_roots)
    assert ys == pytest.approx([-np.sqrt(1.75), np.sqrt(1.75)])
    assert np.sqrt(1.75) == pytest.approx(1.3228756555322954)
    assert all(float(r[0]) == pytest.approx(1.5) for r in p.known_roots)


def test_cubic2d_roots_are_cube_roots_of_unity():
    p = corpus_by_name("cubic2d")
    assert len(p.known_roots) == 3
    for r in p.known_roots:
        z = complex(r[0], r[1])
        assert abs(z**3 - 1.0) < 1e-12


def test_newton_cycle_map_alternates():
    # N(x) = x - F/F': N(0) = 0 - 2/(-2) = 1, N(1) = 1 - 1/1 = 0
    p = corpus_by_name("newton_cycle")
    assert newton_baseline_step(p, [0.0]) == pytest.approx([1.0])
    assert newton_baseline_step(p, [1.0]) == pytest.approx([0.0])


def test_newton_cycle_root_matches_bisection_oracle():
    f = lambda x: x**3 - 2.0 * x + 2.0
    lo, hi = -2.0, -1.5
    assert f(lo) < 0 < f(hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    assert NEWTON_CYCLE_ROOT == pytest.approx(0.5 * (lo + hi), abs=1e-14)


# ---------------------------------------------------------------------------
# finite-difference consistency
# ---------------------------------------------------------------------------

def fd_grad_of_f(p, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h * (1.0 + abs(x[i]))
        g[i] = (eval_f(p, x + e) - eval_f(p, x - e)) / (2 * e[i])
    return g


def test_grad_matches_fd_of_f_on_corpus():
    rng = np.random.default_rng(42)
    for p in corpus():
        for _ in range(50):
            x = rng.uniform(-2.0, 2.0, size=p.domain_dim)
            g = grad_f(p, x)
            fd = fd_grad_of_f(p, x)
            assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(g))


def test_hess_analytic_matches_fd_on_corpus():
    rng = np.random.default_rng(43)
    for p in corpus():
        if p.component_hessians_analytic is None:
            continue
        for _ in range(10):
            x = rng.uniform(-2.0, 2.0, size=p.domain_dim)
            ha = hess_f(p, x, ANALYTIC)
            hf = hess_f(p, x, CENTRAL_DIFFERENCE)
            assert np.linalg.norm(ha - hf) <= 1e-4 * max(1.0, np.linalg.norm(ha))


def test_jacobian_fd_matches_analytic_on_corpus():
    rng = np.random.default_rng(44)
    for p in corpus():
        for _ in range(10):
            x = rng.uniform(-2.0, 2.0, size=p.domain_dim)
            ja = jacobian(p, x, ANALYTIC)
            jf = jacobian(p, x, CENTRAL_DIFFERENCE)
            assert np.linalg.norm(ja - jf) <= 1e-6 * max(1.0, np.linalg.norm(ja))


def test_hessian_dot_f_at_saddle():
    # sum_i F_i hess F_i at the saddle of saddle1d: 1 * (-2) = -2
    p = corpus_by_name("saddle1d")
    assert hessian_dot_f(p, [0.0]) == pytest.approx([[-2.0]])
