"""Symmetric-matrix spectral utilities.

Everything the solvers need from dense linear algebra lives here: the
eigendecomposition primitive, the minimum absolute eigenvalue ("minsp"),
negative-definiteness tests, and the reflected solve, which inverts a
symmetric matrix after flipping the sign of its negative eigenspace. The
eigendecomposition is the single primitive; positive/negative eigenspace
projections are realized inside :func:`reflected_solve` by sign inspection
rather than exposed separately, so each solver iteration pays for one
decomposition only.

Eigenvalues with ``|lam| <= 1e-14 * max(1, ||A||_F)`` are treated as zero and
make :func:`reflected_solve` raise :class:`SingularMatrix`; upstream
regularization guarantees a minsp floor, so hitting this path signals a bug,
not a recoverable state.
"""

from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import InvalidInput, SingularMatrix

__all__ = [
    "SpectralDecomposition",
    "symmetrize",
    "eigh",
    "minsp",
    "reflected_solve",
    "is_negative_definite",
]

_ZERO_EIG_REL = 1e-14


class SpectralDecomposition(NamedTuple):
    """Eigenvalues in ascending order with matching orthonormal eigenvector
    columns: ``A == eigenvectors @ diag(eigenvalues) @ eigenvectors.T``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def symmetrize(a) -> np.ndarray:
    """Validate a square real matrix and return its exactly symmetric part.

    Raises InvalidInput on non-square shape or non-finite entries.
    """
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("matrix has non-finite entries")
    return 0.5 * (arr + arr.T)


def eigh(a) -> SpectralDecomposition:
    """Eigendecomposition of a symmetric matrix.

    The input is symmetrized (and validated) first, so slightly asymmetric
    float input is accepted; asymmetric-by-construction input is the caller's
    bug and will silently lose its skew part.
    """
    sym = symmetrize(a)
    vals, vecs = _kernels.sym_eigh(sym)
    return SpectralDecomposition(np.asarray(vals), np.asarray(vecs))


def minsp(a) -> float:
    """min { |lam| : lam an eigenvalue of the symmetric matrix a }."""
    decomp = eigh(a)
    return float(np.min(np.abs(decomp.eigenvalues)))


def _zero_threshold(vals: np.ndarray) -> float:
    # ||A||_F from the spectrum: sqrt(sum lam_i^2).
    frob = float(np.sqrt(np.sum(vals**2)))
    return _ZERO_EIG_REL * max(1.0, frob)


def reflected_solve(a, b) -> np.ndarray:
    """Solve A w' = b, then flip the component of w' in the negative
    eigenspace of A; equivalently apply |A|^-1 where |A| has eigenvalues
    |lam_i|.

    For positive definite A this is a plain solve. The result w always
    satisfies <w, b> >= 0, with equality iff b == 0.

    Raises SingularMatrix when minsp(A) is at the zero threshold.
    """
    vals, vecs = eigh(a)
    rhs = np.asarray(b, dtype=float)
    if rhs.shape != (vals.shape[0],):
        raise InvalidInput(f"rhs shape {rhs.shape} does not match dim {vals.shape[0]}")
    if float(np.min(np.abs(vals))) <= _zero_threshold(vals):
        raise SingularMatrix("matrix has a (numerically) zero eigenvalue")
    return np.asarray(_kernels.spectral_apply_inverse(vals, vecs, rhs, 0.0, True))


def is_negative_definite(m, tol: float) -> bool:
    """True iff the largest eigenvalue of the symmetric matrix m is < -tol."""
    vals, _ = eigh(m)
    return bool(vals[-1] < -tol)
