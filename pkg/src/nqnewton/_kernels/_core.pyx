# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel backend.

Same surface as `_py_core`, specialized for the small dense matrices that
dominate the solver inner loop: closed-form 2x2 eigendecomposition, cyclic
Jacobi sweeps up to JACOBI_MAX, and fused regularize-and-solve steps that
avoid per-call numpy overhead. Larger matrices delegate to numpy's LAPACK
eigensolver (they are rare at the intended problem scale).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, hypot, pow as cpow, sqrt

cnp.import_array()

BACKEND = "compiled"

BRANCH_FULL = 0
BRANCH_TAU = 1

cdef int JACOBI_MAX = 32
cdef int JACOBI_SWEEPS = 50


cdef void _eigh2(double a, double c, double b,
                 double* lam, double* v) noexcept nogil:
    # Symmetric [[a, c], [c, b]]; lam ascending, v column-major 2x2.
    cdef double mean, half_diff, disc, v0, v1, nrm
    if c == 0.0:
        if a <= b:
            lam[0] = a; lam[1] = b
            v[0] = 1.0; v[2] = 0.0; v[1] = 0.0; v[3] = 1.0
        else:
            lam[0] = b; lam[1] = a
            v[0] = 0.0; v[2] = 1.0; v[1] = 1.0; v[3] = 0.0
        return
    mean = 0.5 * (a + b)
    half_diff = 0.5 * (a - b)
    disc = hypot(half_diff, c)
    lam[0] = mean - disc
    lam[1] = mean + disc
    # Eigenvector of the larger eigenvalue, picked to avoid cancellation.
    if half_diff >= 0.0:
        v0 = half_diff + disc       # lam2 - b
        v1 = c
    else:
        v0 = c
        v1 = disc - half_diff       # lam2 - a
    nrm = hypot(v0, v1)
    v0 /= nrm; v1 /= nrm
    # columns: e1 = rotate(e2) by 90deg, e2 = (v0, v1)
    v[0] = -v1; v[1] = v0
    v[2] = v0;  v[3] = v1


cdef int _jacobi(double[:, ::1] a, double[:, ::1] v, int m) noexcept nogil:
    # In-place cyclic Jacobi on a (destroyed); eigenvectors accumulated in v.
    cdef int sweep, p, q, r
    cdef double off, frob, apq, app, aqq, theta, t, c, s, arp, arq
    for r in range(m):
        for p in range(m):
            v[r, p] = 1.0 if r == p else 0.0
    for sweep in range(JACOBI_SWEEPS):
        off = 0.0
        frob = 0.0
        for p in range(m):
            for q in range(m):
                frob += a[p, q] * a[p, q]
                if p != q:
                    off += a[p, q] * a[p, q]
        if off <= 1e-30 * frob or off == 0.0:
            return 0
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                if fabs(apq) < 1e-36 * (fabs(app) + fabs(aqq)):
                    continue
                theta = 0.5 * (aqq - app) / apq
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for r in range(m):
                    arp = a[r, p]
                    arq = a[r, q]
                    a[r, p] = c * arp - s * arq
                    a[r, q] = s * arp + c * arq
                for r in range(m):
                    arp = a[p, r]
                    arq = a[q, r]
                    a[p, r] = c * arp - s * arq
                    a[q, r] = s * arp + c * arq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for r in range(m):
                    arp = v[r, p]
                    arq = v[r, q]
                    v[r, p] = c * arp - s * arq
                    v[r, q] = s * arp + c * arq
    return 1


cdef void _sort_ascending(double[::1] vals, double[:, ::1] vecs, int m) noexcept nogil:
    # Insertion sort with parallel column permutation.
    cdef int i, j, r
    cdef double key, tmp
    for i in range(1, m):
        key = vals[i]
        j = i - 1
        while j >= 0 and vals[j] > key:
            vals[j + 1] = vals[j]
            for r in range(m):
                tmp = vecs[r, j + 1]
                vecs[r, j + 1] = vecs[r, j]
                vecs[r, j] = tmp
            # key's column travelled with the swaps above
            j -= 1
        vals[j + 1] = key


def sym_eigh(a):
    """Eigendecomposition of a symmetric matrix: ascending eigenvalues and
    matching orthonormal eigenvector columns."""
    cdef cnp.ndarray[double, ndim=2, mode="c"] amat = np.ascontiguousarray(a, dtype=np.float64)
    cdef int m = amat.shape[0]
    cdef double lam2[2]
    cdef double v2[4]
    if m == 1:
        return amat[0, :1].copy(), np.ones((1, 1))
    if m == 2:
        _eigh2(amat[0, 0], amat[0, 1], amat[1, 1], lam2, v2)
        vals = np.array([lam2[0], lam2[1]])
        vecs = np.array([[v2[0], v2[2]], [v2[1], v2[3]]])
        return vals, vecs
    if m > JACOBI_MAX:
        return np.linalg.eigh(amat)
    work = amat.copy()
    vals_arr = np.empty(m)
    vecs_arr = np.empty((m, m))
    cdef double[:, ::1] wv = work
    cdef double[:, ::1] vv = vecs_arr
    cdef double[::1] dv = vals_arr
    cdef int i
    with nogil:
        _jacobi(wv, vv, m)
        for i in range(m):
            dv[i] = wv[i, i]
        _sort_ascending(dv, vv, m)
    return vals_arr, vecs_arr


cdef int _ladder_scan(double[::1] vals, double[::1] deltas,
                      double scale, double kappa, int m, int nl) noexcept nogil:
    cdef int j, i
    cdef double floor, mn, x
    floor = kappa * scale
    for j in range(nl):
        mn = fabs(vals[0] + deltas[j] * scale)
        for i in range(1, m):
            x = fabs(vals[i] + deltas[j] * scale)
            if x < mn:
                mn = x
        if mn >= floor:
            return j
    return -1


def ladder_first_index(vals, deltas, double scale, double kappa):
    """First index j with min_i |vals_i + deltas_j*scale| >= kappa*scale,
    or -1 when the ladder is exhausted."""
    cdef cnp.ndarray[double, ndim=1, mode="c"] v = np.ascontiguousarray(vals, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] d = np.ascontiguousarray(deltas, dtype=np.float64)
    return _ladder_scan(v, d, scale, kappa, v.shape[0], d.shape[0])


cdef void _apply_inverse(double[::1] vals, double[:, ::1] vecs, double[::1] b,
                         double shift, bint reflect, double[::1] out, int m) noexcept nogil:
    cdef int i, r
    cdef double coeff, lam
    for r in range(m):
        out[r] = 0.0
    for i in range(m):
        coeff = 0.0
        for r in range(m):
            coeff += vecs[r, i] * b[r]
        lam = vals[i] + shift
        if reflect:
            lam = fabs(lam)
        coeff /= lam
        for r in range(m):
            out[r] += coeff * vecs[r, i]


def spectral_apply_inverse(vals, vecs, b, double shift, bint reflect):
    """Apply (A + shift*I)^-1 to b in the eigenbasis of A; reflect=True takes
    absolute shifted eigenvalues (flips the negative eigenspace)."""
    cdef cnp.ndarray[double, ndim=1, mode="c"] v = np.ascontiguousarray(vals, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] e = np.ascontiguousarray(vecs, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] rhs = np.ascontiguousarray(b, dtype=np.float64)
    cdef int m = v.shape[0]
    out = np.empty(m)
    cdef double[::1] ov = out
    _apply_inverse(v, e, rhs, shift, reflect, ov, m)
    return out


def nqnse_direction(bmat, grad_half, double norm_f, deltas, double tau, double kappa):
    """Fused regularize-and-solve step for the spectral-reflection method.

    Returns (w, j, branch, minsp_a); j == -1 flags ladder exhaustion.
    """
    vals, vecs = sym_eigh(bmat)
    cdef cnp.ndarray[double, ndim=1, mode="c"] v = np.ascontiguousarray(vals)
    cdef cnp.ndarray[double, ndim=2, mode="c"] e = np.ascontiguousarray(vecs)
    cdef cnp.ndarray[double, ndim=1, mode="c"] gh = np.ascontiguousarray(grad_half, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] d = np.ascontiguousarray(deltas, dtype=np.float64)
    cdef int m = v.shape[0]
    cdef int i, j, branch
    cdef double minsp_b, scale, shift, minsp_a, x
    minsp_b = fabs(v[0])
    for i in range(1, m):
        x = fabs(v[i])
        if x < minsp_b:
            minsp_b = x
    if minsp_b > cpow(norm_f, tau):
        branch = BRANCH_FULL
        scale = norm_f
    else:
        branch = BRANCH_TAU
        scale = cpow(norm_f, tau)
    j = _ladder_scan(v, d, scale, kappa, m, d.shape[0])
    if j < 0:
        return None, -1, branch, 0.0
    shift = d[j] * scale
    minsp_a = fabs(v[0] + shift)
    for i in range(1, m):
        x = fabs(v[i] + shift)
        if x < minsp_a:
            minsp_a = x
    out = np.empty(m)
    cdef double[::1] ov = out
    _apply_inverse(v, e, gh, shift, True, ov, m)
    return out, j, branch, minsp_a


def lmm_direction(hth, grad_half, double norm_f, double delta0, double delta1, double tau):
    """Fused step for the damped Gauss-Newton method. Returns (w, j, minsp_a)."""
    vals, vecs = sym_eigh(hth)
    cdef cnp.ndarray[double, ndim=1, mode="c"] v = np.ascontiguousarray(vals)
    cdef cnp.ndarray[double, ndim=2, mode="c"] e = np.ascontiguousarray(vecs)
    cdef cnp.ndarray[double, ndim=1, mode="c"] gh = np.ascontiguousarray(grad_half, dtype=np.float64)
    cdef int m = v.shape[0]
    cdef int i, j
    cdef double minsp_b, shift, minsp_a, x
    minsp_b = fabs(v[0])
    for i in range(1, m):
        x = fabs(v[i])
        if x < minsp_b:
            minsp_b = x
    if minsp_b > cpow(norm_f, tau):
        j = 0
        shift = delta0 * norm_f
    else:
        j = 1
        shift = delta1 * cpow(norm_f, tau)
    minsp_a = fabs(v[0] + shift)
    for i in range(1, m):
        x = fabs(v[i] + shift)
        if x < minsp_a:
            minsp_a = x
    out = np.empty(m)
    cdef double[::1] ov = out
    _apply_inverse(v, e, gh, shift, False, ov, m)
    return out, j, minsp_a


def qnorm_column_weights(a, double q):
    """q-norm of each column of a: (sum_i |a_ij|^q)^(1/q)."""
    cdef cnp.ndarray[double, ndim=2, mode="c"] amat = np.ascontiguousarray(a, dtype=np.float64)
    cdef int m = amat.shape[0], n = amat.shape[1]
    out = np.empty(n)
    cdef double[::1] ov = out
    cdef int i, r
    cdef double acc
    for i in range(n):
        acc = 0.0
        if q == 1.0:
            for r in range(m):
                acc += fabs(amat[r, i])
            ov[i] = acc
        else:
            for r in range(m):
                acc += cpow(fabs(amat[r, i]), q)
            ov[i] = cpow(acc, 1.0 / q)
    return out


def general_direction(bmat, grad, double norm_f, deltas, double tau,
                      double kappa, double q, bint eigen_basis):
    """Fused step for the q-norm weighted scheme. Returns (w, j, branch, minsp_a)."""
    vals, vecs = sym_eigh(bmat)
    cdef cnp.ndarray[double, ndim=1, mode="c"] v = np.ascontiguousarray(vals)
    cdef cnp.ndarray[double, ndim=2, mode="c"] e = np.ascontiguousarray(vecs)
    cdef cnp.ndarray[double, ndim=1, mode="c"] g = np.ascontiguousarray(grad, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] d = np.ascontiguousarray(deltas, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] bm = np.ascontiguousarray(bmat, dtype=np.float64)
    cdef int m = v.shape[0]
    cdef int i, r, j, branch
    cdef double minsp_b, scale, shift, minsp_a, x, acc
    minsp_b = fabs(v[0])
    for i in range(1, m):
        x = fabs(v[i])
        if x < minsp_b:
            minsp_b = x
    if minsp_b > cpow(norm_f, tau):
        branch = BRANCH_FULL
        scale = norm_f
    else:
        branch = BRANCH_TAU
        scale = cpow(norm_f, tau)
    j = _ladder_scan(v, d, scale, kappa, m, d.shape[0])
    if j < 0:
        return None, -1, branch, 0.0
    shift = d[j] * scale
    minsp_a = fabs(v[0] + shift)
    for i in range(1, m):
        x = fabs(v[i] + shift)
        if x < minsp_a:
            minsp_a = x
    out = np.empty(m)
    cdef double[::1] ov = out
    if eigen_basis:
        _apply_inverse(v, e, g, shift, True, ov, m)
    else:
        for i in range(m):
            acc = 0.0
            if q == 1.0:
                for r in range(m):
                    acc += fabs(bm[r, i]) if r != i else fabs(bm[r, i] + shift)
            else:
                for r in range(m):
                    x = bm[r, i] + shift if r == i else bm[r, i]
                    acc += cpow(fabs(x), q)
                acc = cpow(acc, 1.0 / q)
            ov[i] = g[i] / acc
    return out, j, branch, minsp_a
