# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.

Signatures and algorithmic decisions mirror cvxadp.kernels._pure exactly;
see that module for documentation.  Keep the two in lockstep.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, sqrt

cnp.import_array()

OPTIMAL = 0
UNBOUNDED = 1
BUDGET = 2


def simplex_chunk(double[:, ::1] A, double[::1] c, long long[::1] basis,
                  double[:, ::1] Binv, double[::1] xB, cnp.uint8_t[::1] allowed,
                  int bland, double tol_opt, double tol_piv, int max_pivots):
    cdef Py_ssize_t m = A.shape[0]
    cdef Py_ssize_t N = A.shape[1]
    cdef int pivots = 0
    cdef Py_ssize_t i, j, k, q, r
    cdef double acc, best, red, theta, piv, theta_r, dr, tie_cut
    cdef long long best_var
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] in_basis_arr = np.zeros(N, dtype=np.uint8)
    cdef cnp.uint8_t[::1] in_basis = in_basis_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y_arr = np.empty(m)
    cdef double[::1] y = y_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d_arr = np.empty(m)
    cdef double[::1] d = d_arr

    for i in range(m):
        in_basis[basis[i]] = 1

    while pivots < max_pivots:
        # y = c_B @ Binv
        for j in range(m):
            acc = 0.0
            for i in range(m):
                acc += c[basis[i]] * Binv[i, j]
            y[j] = acc
        # price: find entering column q
        q = -1
        best = -tol_opt
        for j in range(N):
            if not allowed[j] or in_basis[j]:
                continue
            acc = c[j]
            for i in range(m):
                acc -= y[i] * A[i, j]
            red = acc
            if bland:
                if red < -tol_opt:
                    q = j
                    break
            else:
                if red < best:
                    best = red
                    q = j
        if q < 0:
            return OPTIMAL, pivots
        # direction d = Binv @ A[:, q]
        for i in range(m):
            acc = 0.0
            for k in range(m):
                acc += Binv[i, k] * A[k, q]
            d[i] = acc
        # ratio test
        theta = INFINITY
        for i in range(m):
            if d[i] > tol_piv:
                acc = xB[i] / d[i]
                if acc < theta:
                    theta = acc
        if theta == INFINITY:
            return UNBOUNDED, pivots
        tie_cut = theta + 1e-12 * (1.0 + fabs(theta))
        r = -1
        best_var = 0
        for i in range(m):
            if d[i] > tol_piv and xB[i] / d[i] <= tie_cut:
                if r < 0:
                    r = i
                    best_var = basis[i]
                    if not bland:
                        break  # first tie row, Dantzig mode
                elif bland and basis[i] < best_var:
                    r = i
                    best_var = basis[i]
        piv = d[r]
        theta_r = xB[r] / piv
        # Binv update: row r scaled, others eliminated
        for j in range(m):
            Binv[r, j] /= piv
        for i in range(m):
            if i == r:
                continue
            dr = d[i]
            if dr != 0.0:
                for j in range(m):
                    Binv[i, j] -= dr * Binv[r, j]
                xB[i] -= dr * theta_r
            if xB[i] < 0 and xB[i] > -1e-11:
                xB[i] = 0.0
        xB[r] = theta_r
        in_basis[basis[r]] = 0
        in_basis[q] = 1
        basis[r] = q
        pivots += 1
    return BUDGET, pivots


def max_affine_argmax(double[:, ::1] slopes, double[::1] intercepts,
                      double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t K = slopes.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals_arr = np.empty(n)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] idx_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] vals = vals_arr
    cdef long long[::1] idx = idx_arr
    cdef Py_ssize_t i, j, k
    cdef double acc, best
    cdef Py_ssize_t bk
    for i in range(n):
        best = -INFINITY
        bk = 0
        for k in range(K):
            acc = intercepts[k]
            for j in range(d):
                acc += slopes[k, j] * X[i, j]
            if acc > best:
                best = acc
                bk = k
        vals[i] = best
        idx[i] = bk
    return vals_arr, idx_arr


def hit_and_run_walk(double[:, ::1] Q, double[::1] cvec, double[::1] x,
                     double[:, ::1] dirs, double[::1] unifs,
                     Py_ssize_t want, double[:, ::1] out):
    cdef Py_ssize_t S = dirs.shape[0]
    cdef Py_ssize_t r = Q.shape[0]
    cdef Py_ssize_t d = Q.shape[1]
    cdef Py_ssize_t emitted = 0
    cdef Py_ssize_t consumed = 0
    cdef Py_ssize_t i, j
    cdef double nrm, qd, slack, hi, lo, step
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u_arr = np.empty(d)
    cdef double[::1] u = u_arr
    while emitted < want and consumed < S:
        nrm = 0.0
        for j in range(d):
            u[j] = dirs[consumed, j]
            nrm += u[j] * u[j]
        if nrm <= 0.0:
            consumed += 1
            continue
        nrm = sqrt(nrm)
        for j in range(d):
            u[j] /= nrm
        hi = INFINITY
        lo = -INFINITY
        for i in range(r):
            qd = 0.0
            slack = cvec[i]
            for j in range(d):
                qd += Q[i, j] * u[j]
                slack -= Q[i, j] * x[j]
            if slack < 0.0:
                slack = 0.0
            if qd > 1e-13:
                if slack / qd < hi:
                    hi = slack / qd
            elif qd < -1e-13:
                if slack / qd > lo:
                    lo = slack / qd
        if hi == INFINITY or lo == -INFINITY or hi - lo <= 1e-12:
            consumed += 1
            continue
        step = lo + unifs[consumed] * (hi - lo)
        for j in range(d):
            x[j] += step * u[j]
            out[emitted, j] = x[j]
        consumed += 1
        emitted += 1
    return emitted, consumed
