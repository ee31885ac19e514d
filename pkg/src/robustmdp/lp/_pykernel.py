"""Pure numpy simplex iteration kernel.

This is the reference implementation of the pivot loop; ``_ckernel.pyx`` is a
line-for-line port that avoids per-pivot Python overhead. Both operate on the
same standard form::

    min cost @ x   s.t.   [A | aux] x = rhs,   lo <= x <= hi

where ``A`` holds the structural columns and each auxiliary column ``k`` is
``aux_sign[k] * e_{aux_row[k]}`` (slacks and artificials).
"""

import numpy as np

BASIC, AT_LOWER, AT_UPPER, FREE, FIXED = 0, 1, 2, 3, 4
OPTIMAL, UNBOUNDED, ITERATION_LIMIT, SINGULAR = 0, 1, 2, 3


def refactor(A, aux_row, aux_sign, basis):
    """Return the explicit inverse of the basis matrix, or None if singular."""
    m, n = A.shape
    B = np.zeros((m, m))
    for i, j in enumerate(basis):
        if j < n:
            B[:, i] = A[:, j]
        else:
            B[aux_row[j - n], i] = aux_sign[j - n]
    try:
        binv = np.linalg.inv(B)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(binv)) or np.abs(binv).max(initial=0.0) > 1e14:
        return None
    return binv


def basic_values(A, aux_row, aux_sign, rhs, x, state, basis, binv):
    """Recompute the basic variables from the nonbasic ones, in place."""
    n = A.shape[1]
    xn = np.where(state[:n] == BASIC, 0.0, x[:n])
    r = rhs - A @ xn
    xa = np.where(state[n:] == BASIC, 0.0, x[n:])
    r -= np.bincount(aux_row, weights=aux_sign * xa, minlength=len(rhs))
    x[basis] = binv @ r


def iterate(A, aux_row, aux_sign, rhs, cost, lo, hi, x, state, basis, binv,
            opt_tol, piv_tol, feas_tol, max_iter, bland_after, refactor_every):
    """Run primal simplex pivots from a feasible basis until optimal.

    ``x``, ``state``, ``basis`` and ``binv`` are updated in place. Returns
    ``(status, pivots, used_bland)``.
    """
    m, n = A.shape
    n_total = n + len(aux_row)
    d = np.empty(n_total)
    degenerate = 0
    bland = False
    since_refactor = 0
    for it in range(max_iter):
        y = cost[basis] @ binv
        d[:n] = cost[:n] - y @ A
        d[n:] = cost[n:] - aux_sign * y[aux_row]
        can_inc = (state == AT_LOWER) | (state == FREE)
        can_dec = (state == AT_UPPER) | (state == FREE)
        inc = can_inc & (d < -opt_tol)
        dec = can_dec & (d > opt_tol)
        cand = inc | dec
        if not cand.any():
            return OPTIMAL, it, bland
        if bland:
            q = int(np.argmax(cand))
        else:
            q = int(np.argmax(np.where(cand, np.abs(d), -1.0)))
        direction = 1.0 if inc[q] else -1.0

        if q < n:
            alpha = binv @ A[:, q]
        else:
            alpha = binv[:, aux_row[q - n]] * aux_sign[q - n]
        rate = -direction * alpha

        xb = x[basis]
        lob, hib = lo[basis], hi[basis]
        down = rate < -piv_tol
        up = rate > piv_tol
        ratio = np.full(m, np.inf)
        relaxed = np.full(m, np.inf)
        with np.errstate(invalid="ignore"):
            ratio[down] = (xb[down] - lob[down]) / -rate[down]
            ratio[up] = (hib[up] - xb[up]) / rate[up]
            relaxed[down] = (xb[down] - lob[down] + feas_tol) / -rate[down]
            relaxed[up] = (hib[up] - xb[up] + feas_tol) / rate[up]
        ratio[np.isnan(ratio)] = np.inf
        relaxed[np.isnan(relaxed)] = np.inf
        np.maximum(ratio, 0.0, out=ratio)

        own = hi[q] - lo[q]
        theta_min = ratio.min() if m else np.inf
        if own <= theta_min:
            if np.isinf(own):
                return UNBOUNDED, it, bland
            theta = own
            r = -1
        elif bland:
            ties = np.flatnonzero(ratio <= theta_min + 1e-12 * (1.0 + theta_min))
            r = int(ties[np.argmin(basis[ties])])
            theta = theta_min
        else:
            # Harris: among rows blocking within the relaxed step take the largest pivot
            ties = np.flatnonzero(ratio <= relaxed.min())
            r = int(ties[np.argmax(np.abs(alpha[ties]))])
            theta = ratio[r]

        if theta > 0.0:
            x[basis] = xb + theta * rate
        x[q] += direction * theta
        if r < 0:
            state[q] = AT_UPPER if direction > 0 else AT_LOWER
            x[q] = hi[q] if direction > 0 else lo[q]
        else:
            leaving = basis[r]
            if rate[r] < 0:
                x[leaving] = lo[leaving]
                state[leaving] = AT_LOWER
            else:
                x[leaving] = hi[leaving]
                state[leaving] = AT_UPPER
            if lo[leaving] == hi[leaving]:
                state[leaving] = FIXED
            basis[r] = q
            state[q] = BASIC
            pivot_row = binv[r] / alpha[r]
            rows = np.flatnonzero(alpha)
            binv[rows] -= np.outer(alpha[rows], pivot_row)
            binv[r] = pivot_row
            since_refactor += 1

        if theta <= piv_tol:
            degenerate += 1
            if degenerate > bland_after:
                bland = True
        else:
            degenerate = 0

        if since_refactor >= refactor_every:
            fresh = refactor(A, aux_row, aux_sign, basis)
            if fresh is None:
                return SINGULAR, it + 1, bland
            binv[...] = fresh
            basic_values(A, aux_row, aux_sign, rhs, x, state, basis, binv)
            since_refactor = 0
    return ITERATION_LIMIT, max_iter, bland
