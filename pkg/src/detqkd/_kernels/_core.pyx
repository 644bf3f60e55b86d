# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: 4x4 Hermitian eigensolver and attack objective.

Same contracts as the numpy fallback in ``pure``. The eigensolver is a
cyclic Jacobi iteration with complex rotations, which is exact to rounding
for fixed size 4 and avoids per-call LAPACK dispatch overhead.
"""

import numpy as np

from libc.math cimport sqrt, cos, sin

BACKEND = "compiled"

ctypedef double complex dcplx

cdef double _OFF_EPS = 1e-30
cdef int _MAX_SWEEPS = 60


cdef inline double _abs2(dcplx z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef void _jacobi4(dcplx a[4][4], double w[4], dcplx v[4][4], bint want_vectors) nogil:
    """Diagonalize Hermitian ``a`` in place; ascending eigenvalues in ``w``.

    When ``want_vectors`` is set, the columns of ``v`` hold the matching
    orthonormal eigenvectors. ``a`` is destroyed.
    """
    cdef int p, q, i, j, sweep
    cdef double off, absapq, tau, t, c
    cdef dcplx apq, s, cs, tmp_p, tmp_q

    if want_vectors:
        for i in range(4):
            for j in range(4):
                v[i][j] = 1.0 if i == j else 0.0

    for sweep in range(_MAX_SWEEPS):
        off = 0.0
        for p in range(3):
            for q in range(p + 1, 4):
                off += _abs2(a[p][q])
        if off <= _OFF_EPS:
            break
        for p in range(3):
            for q in range(p + 1, 4):
                apq = a[p][q]
                absapq = sqrt(_abs2(apq))
                if absapq == 0.0:
                    continue
                tau = (a[q][q].real - a[p][p].real) / (2.0 * absapq)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = (c * t / absapq) * apq
                cs = s.conjugate()
                # columns p, q of a  (a <- a J)
                for i in range(4):
                    tmp_p = a[i][p]
                    tmp_q = a[i][q]
                    a[i][p] = c * tmp_p - cs * tmp_q
                    a[i][q] = s * tmp_p + c * tmp_q
                # rows p, q of a  (a <- J^H a)
                for j in range(4):
                    tmp_p = a[p][j]
                    tmp_q = a[q][j]
                    a[p][j] = c * tmp_p - s * tmp_q
                    a[q][j] = cs * tmp_p + c * tmp_q
                if want_vectors:
                    for i in range(4):
                        tmp_p = v[i][p]
                        tmp_q = v[i][q]
                        v[i][p] = c * tmp_p - cs * tmp_q
                        v[i][q] = s * tmp_p + c * tmp_q

    for i in range(4):
        w[i] = a[i][i].real

    # insertion sort, ascending, carrying eigenvector columns along
    cdef int m, pos
    cdef double key
    for m in range(1, 4):
        key = w[m]
        pos = m - 1
        while pos >= 0 and w[pos] > key:
            w[pos + 1] = w[pos]
            if want_vectors:
                for i in range(4):
                    tmp_p = v[i][pos + 1]
                    v[i][pos + 1] = v[i][pos]
                    v[i][pos] = tmp_p
            pos -= 1
        w[pos + 1] = key


cdef void _load4(const dcplx[:, :] src, dcplx dst[4][4]) nogil:
    cdef int i, j
    for i in range(4):
        for j in range(4):
            dst[i][j] = src[i, j]


def eigh4(a):
    """Eigen-decomposition of a 4x4 Hermitian matrix, ascending eigenvalues."""
    cdef dcplx am[4][4]
    cdef dcplx vm[4][4]
    cdef double wm[4]
    arr = np.ascontiguousarray(a, dtype=complex)
    cdef const dcplx[:, :] view = arr
    _load4(view, am)
    _jacobi4(am, wm, vm, True)
    w = np.empty(4, dtype=float)
    v = np.empty((4, 4), dtype=complex)
    cdef double[:] wv = w
    cdef dcplx[:, :] vv = v
    cdef int i, j
    for i in range(4):
        wv[i] = wm[i]
        for j in range(4):
            vv[i, j] = vm[i][j]
    return w, v


cdef void _hermitian_from_theta(const double[:] theta, dcplx h[4][4]) nogil:
    cdef int i, j, pos
    for i in range(4):
        for j in range(4):
            h[i][j] = 0.0
        h[i][i] = theta[i]
    pos = 4
    for i in range(4):
        for j in range(i + 1, 4):
            h[i][j] = theta[pos] + 1j * theta[pos + 1]
            h[j][i] = h[i][j].conjugate()
            pos += 2


cdef void _unitary_from_theta(const double[:] theta, dcplx u[4][4]) nogil:
    """u = exp(i H(theta)) via eigen-decomposition of H."""
    cdef dcplx h[4][4]
    cdef dcplx v[4][4]
    cdef double w[4]
    cdef dcplx phase, acc
    cdef int i, j, m
    _hermitian_from_theta(theta, h)
    _jacobi4(h, w, v, True)
    for i in range(4):
        for j in range(4):
            acc = 0.0
            for m in range(4):
                phase = cos(w[m]) + 1j * sin(w[m])
                acc = acc + v[i][m] * phase * v[j][m].conjugate()
            u[i][j] = acc


def unitary_from_params(theta):
    """exp(i*H(theta)) for the 16-parameter Hermitian H."""
    cdef dcplx um[4][4]
    arr = np.ascontiguousarray(theta, dtype=float)
    if arr.shape[0] != 16:
        raise ValueError("theta must have 16 entries")
    cdef const double[:] tview = arr
    _unitary_from_theta(tview, um)
    u = np.empty((4, 4), dtype=complex)
    cdef dcplx[:, :] uv = u
    cdef int i, j
    for i in range(4):
        for j in range(4):
            uv[i, j] = um[i][j]
    return u


def strategy_objective(theta, signals, priors, wrong_ops):
    """Average wrong-click probability of the measure-and-resend attack.

    See the fallback in ``pure`` for the definition; inputs are the 16
    basis parameters, the 4xS signal matrix, the S priors, and the Sx4x4
    stack of Hermitian wrong-click operators.
    """
    cdef dcplx um[4][4]
    cdef dcplx mm[4][4]
    cdef dcplx vm[4][4]
    cdef double wm[4]
    cdef dcplx ov
    cdef double coeff, total
    cdef int e, s, i, j, ns

    theta_arr = np.ascontiguousarray(theta, dtype=float)
    sig_arr = np.ascontiguousarray(signals, dtype=complex)
    pri_arr = np.ascontiguousarray(priors, dtype=float)
    ops_arr = np.ascontiguousarray(wrong_ops, dtype=complex)

    cdef const double[:] tview = theta_arr
    cdef const dcplx[:, :] sig = sig_arr
    cdef const double[:] pri = pri_arr
    cdef const dcplx[:, :, :] ops = ops_arr

    ns = sig.shape[1]
    if tview.shape[0] != 16:
        raise ValueError("theta must have 16 entries")
    if ops.shape[0] != ns or pri.shape[0] != ns:
        raise ValueError("signals, priors and wrong_ops disagree on count")

    _unitary_from_theta(tview, um)
    total = 0.0
    with nogil:
        for e in range(4):
            for i in range(4):
                for j in range(4):
                    mm[i][j] = 0.0
            for s in range(ns):
                ov = 0.0
                for i in range(4):
                    ov = ov + um[i][e].conjugate() * sig[i, s]
                coeff = pri[s] * _abs2(ov)
                for i in range(4):
                    for j in range(4):
                        mm[i][j] = mm[i][j] + coeff * ops[s, i, j]
            _jacobi4(mm, wm, vm, False)
            total += wm[0]
    return total
