"""Spectral utilities: examples with hand-derived values plus randomized
contract checks, run against every available kernel backend."""

import numpy as np
import pytest

from nqnewton import errors, spectral
from nqnewton._kernels import available_backends

BACKENDS = sorted(available_backends().items())

RECON_TOL = 1e-10
ORTHO_TOL = 1e-12


def random_symmetric(rng, m, spread=3.0):
    a = rng.normal(scale=spread, size=(m, m))
    return 0.5 * (a + a.T)


# ---------------------------------------------------------------------------
# eigh
# ---------------------------------------------------------------------------

def test_eigh_diagonal():
    d = spectral.eigh(np.diag([3.0, -2.0]))
    assert np.allclose(d.eigenvalues, [-2.0, 3.0])
    # eigenvector of -2 is e_y, of 3 is e_x, up to sign
    assert abs(abs(d.eigenvectors[1, 0]) - 1.0) < 1e-14
    assert abs(abs(d.eigenvectors[0, 1]) - 1.0) < 1e-14


def test_eigh_identity():
    d = spectral.eigh(np.eye(3))
    assert np.allclose(d.eigenvalues, [1.0, 1.0, 1.0])


def test_eigh_2x2_hand_value():
    # characteristic polynomial of [[2,1],[1,2]]: (lam-2)^2 = 1 -> {1, 3},
    # eigenvectors (1,-1)/sqrt(2) and (1,1)/sqrt(2)
    d = spectral.eigh([[2.0, 1.0], [1.0, 2.0]])
    assert np.allclose(d.eigenvalues, [1.0, 3.0], atol=1e-12)
    lo = np.array([1.0, -1.0]) / np.sqrt(2.0)
    hi = np.array([1.0, 1.0]) / np.sqrt(2.0)
    assert abs(abs(lo @ d.eigenvectors[:, 0]) - 1.0) < 1e-12
    assert abs(abs(hi @ d.eigenvectors[:, 1]) - 1.0) < 1e-12


def test_eigh_rejects_non_finite():
    with pytest.raises(errors.InvalidInput):
        spectral.eigh([[np.nan, 0.0], [0.0, 1.0]])
    with pytest.raises(errors.InvalidInput):
        spectral.eigh(np.ones((2, 3)))


@pytest.mark.parametrize("backend_name,backend", BACKENDS)
def test_eigh_contracts_randomized(backend_name, backend):
    rng = np.random.default_rng(101)
    for _ in range(200):
        m = int(rng.integers(1, 11))
        a = random_symmetric(rng, m)
        vals, vecs = backend.sym_eigh(np.ascontiguousarray(a))
        vals = np.asarray(vals)
        vecs = np.asarray(vecs)
        assert np.all(np.diff(vals) >= -1e-13), f"{backend_name}: not ascending"
        frob = np.linalg.norm(a)
        recon = np.linalg.norm(vecs @ np.diag(vals) @ vecs.T - a)
        assert recon <= RECON_TOL * max(1.0, frob)
        assert np.linalg.norm(vecs.T @ vecs - np.eye(m)) <= ORTHO_TOL * m


def test_backends_agree_on_eigenvalues():
    if len(BACKENDS) < 2:
        pytest.skip("only one backend built")
    rng = np.random.default_rng(7)
    mods = [b for _, b in BACKENDS]
    for _ in range(100):
        m = int(rng.integers(1, 9))
        a = np.ascontiguousarray(random_symmetric(rng, m))
        spectra = [np.asarray(mod.sym_eigh(a)[0]) for mod in mods]
        for s in spectra[1:]:
            assert np.allclose(s, spectra[0], atol=1e-12 * max(1, np.linalg.norm(a)))


# ---------------------------------------------------------------------------
# minsp
# ---------------------------------------------------------------------------

def test_minsp_examples():
    assert spectral.minsp(np.diag([3.0, -2.0])) == pytest.approx(2.0)
    for m in (1, 2, 5):
        assert spectral.minsp(np.eye(m)) == pytest.approx(1.0)
    assert spectral.minsp([[2.0, 1.0], [1.0, 2.0]]) == pytest.approx(1.0, abs=1e-12)


def test_minsp_is_min_abs_eigenvalue():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a = random_symmetric(rng, int(rng.integers(2, 8)))
        assert spectral.minsp(a) == pytest.approx(
            np.min(np.abs(np.linalg.eigvalsh(a))), rel=1e-12, abs=1e-13
        )


# ---------------------------------------------------------------------------
# reflected_solve
# ---------------------------------------------------------------------------

def test_reflected_solve_diagonal_sign_flip():
    # v = A^-1 b = (1, -1); flipping the negative eigenspace gives (1, 1)
    w = spectral.reflected_solve(np.diag([2.0, -3.0]), [2.0, 3.0])
    assert np.allclose(w, [1.0, 1.0], atol=1e-14)


def test_reflected_solve_identity():
    rng = np.random.default_rng(3)
    b = rng.normal(size=4)
    assert np.allclose(spectral.reflected_solve(np.eye(4), b), b, atol=1e-14)


def test_reflected_solve_positive_definite_hand_value():
    # [[2,1],[1,2]]^-1 = (1/3) [[2,-1],[-1,2]], so b=(1,0) -> (2/3, -1/3)
    w = spectral.reflected_solve([[2.0, 1.0], [1.0, 2.0]], [1.0, 0.0])
    assert np.allclose(w, [2.0 / 3.0, -1.0 / 3.0], atol=1e-12)


def test_reflected_solve_positivity_property():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 100:
        m = int(rng.integers(1, 9))
        a = random_symmetric(rng, m)
        if spectral.minsp(a) < 1e-6:
            continue
        b = rng.normal(size=m)
        if np.linalg.norm(b) < 1e-12:
            continue
        w = spectral.reflected_solve(a, b)
        assert float(w @ b) > 0.0
        checked += 1


def test_reflected_solve_matches_plain_solve_when_pd():
    rng = np.random.default_rng(13)
    for _ in range(50):
        m = int(rng.integers(1, 9))
        base = rng.normal(size=(m, m))
        a = base @ base.T + 0.5 * np.eye(m)  # positive definite
        b = rng.normal(size=m)
        w = spectral.reflected_solve(a, b)
        direct = np.linalg.solve(a, b)
        assert np.linalg.norm(w - direct) <= 1e-9 * max(1.0, np.linalg.norm(direct))


def test_reflected_solve_flip_apply_reproduces_rhs():
    rng = np.random.default_rng(17)
    for _ in range(50):
        m = int(rng.integers(1, 9))
        a = random_symmetric(rng, m)
        if spectral.minsp(a) < 1e-6:
            continue
        b = rng.normal(size=m)
        w = spectral.reflected_solve(a, b)
        vals, vecs = np.linalg.eigh(a)
        flipped = vecs @ np.diag(np.abs(vals)) @ vecs.T
        assert np.linalg.norm(flipped @ w - b) <= 1e-9 * max(1.0, np.linalg.norm(b))


def test_reflected_solve_singular_raises():
    with pytest.raises(errors.SingularMatrix):
        spectral.reflected_solve(np.diag([1.0, 0.0]), [1.0, 1.0])


# ---------------------------------------------------------------------------
# is_negative_definite
# ---------------------------------------------------------------------------

def test_is_negative_definite_examples():
    assert spectral.is_negative_definite(-np.eye(2), 1e-8)
    assert not spectral.is_negative_definite(np.eye(2), 1e-8)
    # semidefinite only: zero eigenvalue fails the strict test
    assert not spectral.is_negative_definite(np.diag([-1.0, 0.0]), 1e-8)
