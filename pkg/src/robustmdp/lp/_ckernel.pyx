# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simplex iteration kernel.

Same algorithm and pivoting rules as ``_pykernel.iterate``. Keep the two in
lockstep; they may still differ in the last bits of reduced costs because the
summation order differs, which can flip Dantzig ties.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY, isinf, isnan

from robustmdp.lp._pykernel import refactor, basic_values

cnp.import_array()

cdef enum:
    BASIC = 0
    AT_LOWER = 1
    AT_UPPER = 2
    FREE = 3
    FIXED = 4

cdef enum:
    OPTIMAL = 0
    UNBOUNDED = 1
    ITERATION_LIMIT = 2
    SINGULAR = 3


def iterate(double[::1, :] A, long[::1] aux_row, double[::1] aux_sign,
            rhs, double[::1] cost, double[::1] lo, double[::1] hi,
            double[::1] x, signed char[::1] state, long[::1] basis,
            double[:, ::1] binv, double opt_tol, double piv_tol,
            double feas_tol, long max_iter, long bland_after, long refactor_every):
    cdef Py_ssize_t m = A.shape[0]
    cdef Py_ssize_t n = A.shape[1]
    cdef Py_ssize_t n_aux = aux_row.shape[0]
    cdef Py_ssize_t n_total = n + n_aux
    cdef double[::1] y = np.empty(m)
    cdef double[::1] alpha = np.empty(m)
    cdef double[::1] ratio = np.empty(m)
    cdef double[::1] pivot_row = np.empty(m)
    cdef Py_ssize_t i, j, k, q, r, leaving, it
    cdef long degenerate = 0, since_refactor = 0
    cdef bint bland = False, inc
    cdef double dj, best, direction, theta, theta_min, own, rate_i, s, piv, ai, tie, theta_max, relaxed
    cdef signed char st

    for it in range(max_iter):
        # duals y = c_B^T B^-1
        for j in range(m):
            y[j] = 0.0
        for i in range(m):
            s = cost[basis[i]]
            if s != 0.0:
                for j in range(m):
                    y[j] += s * binv[i, j]

        # pricing
        q = -1
        best = -1.0
        inc = False
        for j in range(n_total):
            st = state[j]
            if st == BASIC or st == FIXED:
                continue
            if j < n:
                dj = cost[j]
                for i in range(m):
                    dj -= y[i] * A[i, j]
            else:
                dj = cost[j] - aux_sign[j - n] * y[aux_row[j - n]]
            if dj < -opt_tol and (st == AT_LOWER or st == FREE):
                if bland:
                    q = j
                    inc = True
                    break
                if -dj > best:
                    best = -dj
                    q = j
                    inc = True
            elif dj > opt_tol and (st == AT_UPPER or st == FREE):
                if bland:
                    q = j
                    inc = False
                    break
                if dj > best:
                    best = dj
                    q = j
                    inc = False
        if q < 0:
            return OPTIMAL, it, bland
        direction = 1.0 if inc else -1.0

        # entering column in the current basis
        if q < n:
            for i in range(m):
                s = 0.0
                for j in range(m):
                    s += binv[i, j] * A[j, q]
                alpha[i] = s
        else:
            k = aux_row[q - n]
            for i in range(m):
                alpha[i] = binv[i, k] * aux_sign[q - n]

        # ratio test, with a Harris pass bounding the step by relaxed bounds
        theta_min = INFINITY
        theta_max = INFINITY
        for i in range(m):
            rate_i = -direction * alpha[i]
            j = basis[i]
            if rate_i < -piv_tol:
                ratio[i] = (x[j] - lo[j]) / -rate_i
                relaxed = (x[j] - lo[j] + feas_tol) / -rate_i
            elif rate_i > piv_tol:
                ratio[i] = (hi[j] - x[j]) / rate_i
                relaxed = (hi[j] - x[j] + feas_tol) / rate_i
            else:
                ratio[i] = INFINITY
                relaxed = INFINITY
            if isnan(ratio[i]):
                ratio[i] = INFINITY
            if isnan(relaxed):
                relaxed = INFINITY
            if ratio[i] < 0.0:
                ratio[i] = 0.0
            if ratio[i] < theta_min:
                theta_min = ratio[i]
            if relaxed < theta_max:
                theta_max = relaxed

        own = hi[q] - lo[q]
        if own <= theta_min:
            if isinf(own):
                return UNBOUNDED, it, bland
            theta = own
            r = -1
        else:
            r = -1
            best = -1.0
            if bland:
                tie = theta_min + 1e-12 * (1.0 + theta_min)
                for i in range(m):
                    if ratio[i] <= tie and (r < 0 or basis[i] < basis[r]):
                        r = i
                theta = theta_min
            else:
                for i in range(m):
                    if ratio[i] <= theta_max and fabs(alpha[i]) > best:
                        best = fabs(alpha[i])
                        r = i
                theta = ratio[r]

        if theta > 0.0:
            for i in range(m):
                x[basis[i]] += theta * (-direction * alpha[i])
        x[q] += direction * theta
        if r < 0:
            if direction > 0:
                state[q] = AT_UPPER
                x[q] = hi[q]
            else:
                state[q] = AT_LOWER
                x[q] = lo[q]
        else:
            leaving = basis[r]
            if -direction * alpha[r] < 0:
                x[leaving] = lo[leaving]
                state[leaving] = AT_LOWER
            else:
                x[leaving] = hi[leaving]
                state[leaving] = AT_UPPER
            if lo[leaving] == hi[leaving]:
                state[leaving] = FIXED
            basis[r] = q
            state[q] = BASIC
            piv = alpha[r]
            for j in range(m):
                pivot_row[j] = binv[r, j] / piv
            for i in range(m):
                ai = alpha[i]
                if ai != 0.0 and i != r:
                    for j in range(m):
                        binv[i, j] -= ai * pivot_row[j]
            for j in range(m):
                binv[r, j] = pivot_row[j]
            since_refactor += 1

        if theta <= piv_tol:
            degenerate += 1
            if degenerate > bland_after:
                bland = True
        else:
            degenerate = 0

        if since_refactor >= refactor_every:
            basis_arr = np.asarray(basis)
            fresh = refactor(np.asarray(A), np.asarray(aux_row), np.asarray(aux_sign), basis_arr)
            if fresh is None:
                return SINGULAR, it + 1, bland
            np.asarray(binv)[...] = fresh
            basic_values(np.asarray(A), np.asarray(aux_row), np.asarray(aux_sign), rhs,
                         np.asarray(x), np.asarray(state), basis_arr, np.asarray(binv))
            since_refactor = 0
    return ITERATION_LIMIT, max_iter, bland
