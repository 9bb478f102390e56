"""Pure-numpy kernel backend.

Mirrors the compiled `_core` extension function-for-function; selected by
`nqnewton._kernels` when the extension is unavailable or disabled. All
functions take/return plain float64 ndarrays and never raise on the ladder
path (sentinel j = -1 means "ladder exhausted" and is turned into an error by
the caller).
"""

import numpy as np

BACKEND = "python"

# Branch codes shared with the compiled backend.
BRANCH_FULL = 0
BRANCH_TAU = 1


def sym_eigh(a):
    """Eigendecomposition of a symmetric matrix: ascending eigenvalues and
    matching orthonormal eigenvector columns."""
    return np.linalg.eigh(a)


def ladder_first_index(vals, deltas, scale, kappa):
    """First index j with min_i |vals_i + deltas_j*scale| >= kappa*scale.

    Returns -1 when no ladder entry clears the floor.
    """
    floor = kappa * scale
    for j, d in enumerate(deltas):
        if np.min(np.abs(vals + d * scale)) >= floor:
            return j
    return -1


def spectral_apply_inverse(vals, vecs, b, shift, reflect):
    """Apply (A + shift*I)^-1 to b in the eigenbasis of A.

    With reflect=True the shifted eigenvalues enter through their absolute
    values, i.e. the negative-eigenspace component of the solution is flipped.
    """
    lam = vals + shift
    if reflect:
        lam = np.abs(lam)
    coeff = (vecs.T @ b) / lam
    return vecs @ coeff


def nqnse_direction(bmat, grad_half, norm_f, deltas, tau, kappa):
    """Fused regularize-and-solve step for the spectral-reflection method.

    Returns (w, j, branch, minsp_a); j == -1 flags ladder exhaustion.
    """
    vals, vecs = sym_eigh(bmat)
    minsp_b = float(np.min(np.abs(vals)))
    if minsp_b > norm_f**tau:
        branch, scale = BRANCH_FULL, norm_f
    else:
        branch, scale = BRANCH_TAU, norm_f**tau
    j = ladder_first_index(vals, deltas, scale, kappa)
    if j < 0:
        return None, -1, branch, 0.0
    lam = np.abs(vals + deltas[j] * scale)
    minsp_a = float(np.min(lam))
    w = vecs @ ((vecs.T @ grad_half) / lam)
    return w, j, branch, minsp_a


def lmm_direction(hth, grad_half, norm_f, delta0, delta1, tau):
    """Fused step for the damped Gauss-Newton method: branch on minsp(HtH),
    shift by delta0*|F| or delta1*|F|^tau, solve the positive-definite system.

    Returns (w, j, minsp_a).
    """
    vals, vecs = sym_eigh(hth)
    minsp_b = float(np.min(np.abs(vals)))
    if minsp_b > norm_f**tau:
        j, shift = 0, delta0 * norm_f
    else:
        j, shift = 1, delta1 * norm_f**tau
    lam = vals + shift
    minsp_a = float(np.min(np.abs(lam)))
    w = vecs @ ((vecs.T @ grad_half) / lam)
    return w, j, minsp_a


def qnorm_column_weights(a, q):
    """q-norm of each column of a: (sum_i |a_ij|^q)^(1/q)."""
    if q == 1.0:
        return np.sum(np.abs(a), axis=0)
    return np.sum(np.abs(a) ** q, axis=0) ** (1.0 / q)


def general_direction(bmat, grad, norm_f, deltas, tau, kappa, q, eigen_basis):
    """Fused step for the q-norm weighted scheme.

    With eigen_basis=True the basis is the eigenbasis of the regularized
    operator (weights reduce to |shifted eigenvalues|); otherwise the standard
    basis (weights are column q-norms). Returns (w, j, branch, minsp_a).
    """
    vals, vecs = sym_eigh(bmat)
    minsp_b = float(np.min(np.abs(vals)))
    if minsp_b > norm_f**tau:
        branch, scale = BRANCH_FULL, norm_f
    else:
        branch, scale = BRANCH_TAU, norm_f**tau
    j = ladder_first_index(vals, deltas, scale, kappa)
    if j < 0:
        return None, -1, branch, 0.0
    shift = deltas[j] * scale
    lam = vals + shift
    minsp_a = float(np.min(np.abs(lam)))
    if eigen_basis:
        w = vecs @ ((vecs.T @ grad) / np.abs(lam))
    else:
        amat = bmat + shift * np.eye(bmat.shape[0])
        w = grad / qnorm_column_weights(amat, q)
    return w, j, branch, minsp_a
