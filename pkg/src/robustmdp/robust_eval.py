"""Robust policy evaluation and the robust Bellman operator.

Evaluation of a fixed policy solves one LP. Each robust constraint
``v[s] - gamma * min_{u in U(s, pi(s))} u @ v <= R(s, pi(s))`` is replaced by
the dual of the inner minimization, which introduces a multiplier per polytope
row: ``w >= 0`` for inequality rows and a free ``y`` for equality rows::

    v[s] + rhs @ w - eq_rhs @ y <= R(s, pi(s))
    -rows[:, c] @ w + eq_rows[:, c] @ y <= gamma * v[c]    for real columns c
    -rows[:, c] @ w + eq_rows[:, c] @ y <= 0               for auxiliary columns c

The column inequalities (rather than equalities) come from the implicit
nonnegativity of polytope coordinates.
"""

from dataclasses import dataclass

import numpy as np

from robustmdp._parallel import ordered_map
from robustmdp.errors import EmptyUncertainty, ModelError, NumericalFailure
from robustmdp.lp import LpProblem, Sense, Status, solve_lp
from robustmdp.model import LpExact, ValueFunction
from robustmdp.uncertainty import polytope_lp


@dataclass(frozen=True, eq=False)
class InnerSolution:
    value: float
    witness: np.ndarray


def inner_min(polytope, v):
    """Minimize ``u @ v`` over the polytope (auxiliary coordinates carry zero cost)."""
    v = np.asarray(v, dtype=float)
    if v.size != polytope.dim:
        raise ModelError(f"value vector has length {v.size}, polytope dimension is {polytope.dim}")
    out = solve_lp(polytope_lp(polytope, v))
    if out.status is Status.INFEASIBLE:
        raise EmptyUncertainty("uncertainty polytope is empty")
    if out.status is Status.UNBOUNDED:
        raise ModelError("uncertainty polytope is unbounded")
    witness = np.zeros(polytope.dim)
    witness[polytope.support_indices] = out.solution[: polytope.n_real_cols]
    return InnerSolution(float(witness @ v), witness)


def robust_q_values(rmdp, v, actions=None, threads=None):
    """``R(s, a) + gamma * inner_min(U(s, a), v)`` for every pair, ``-inf`` elsewhere.

    ``actions`` optionally restricts the computation to a per-state action subset.
    """
    v = np.asarray(v, dtype=float)
    sets = rmdp.enabled if actions is None else actions
    keys = [(s, a) for s, acts in enumerate(sets) for a in acts]
    inner = ordered_map(lambda key: inner_min(rmdp.uncertainty[key], v).value, keys, threads)
    q = np.full((rmdp.n_states, rmdp.n_actions), -np.inf)
    gamma = rmdp.discount
    for (s, a), val in zip(keys, inner):
        q[s, a] = rmdp.reward[s, a] + gamma * val
    return q


def robust_bellman_apply(rmdp, v, threads=None):
    """One application of the robust Bellman operator."""
    return robust_q_values(rmdp, v, threads=threads).max(axis=1)


def _evaluation_lp(rmdp, policy):
    S = rmdp.n_states
    gamma = rmdp.discount
    polys = [rmdp.uncertainty[(s, policy[s])] for s in range(S)]
    n_dual = [p.rows.shape[0] + p.eq_rows.shape[0] for p in polys]
    n_rows = [1 + p.n_cols for p in polys]
    n_vars = S + sum(n_dual)
    A = np.zeros((sum(n_rows), n_vars))
    b = np.zeros(sum(n_rows))
    row = 0
    col = S
    for s, p in enumerate(polys):
        m1 = p.rows.shape[0]
        w = slice(col, col + m1)
        y = slice(col + m1, col + n_dual[s])
        A[row, s] = 1.0
        A[row, w] = p.rhs
        A[row, y] = -p.eq_rhs
        b[row] = rmdp.reward[s, policy[s]]
        block = slice(row + 1, row + n_rows[s])
        A[block, w] = -p.rows.T
        A[block, y] = p.eq_rows.T
        sup = p.support_indices
        A[row + 1 + np.arange(sup.size), sup] -= gamma
        row += n_rows[s]
        col += n_dual[s]
    lower = np.concatenate([np.full(S, -np.inf)] + [
        np.concatenate([np.zeros(p.rows.shape[0]), np.full(p.eq_rows.shape[0], -np.inf)])
        for p in polys
    ])
    return LpProblem(np.concatenate([np.ones(S), np.zeros(n_vars - S)]), Sense.MAXIMIZE,
                     A, b, None, None, lower, None)


def _evaluate(rmdp, policy):
    policy.check(rmdp)
    out = solve_lp(_evaluation_lp(rmdp, policy))
    if out.status is Status.UNBOUNDED:
        raise EmptyUncertainty("an uncertainty polytope on the policy's support is empty")
    if out.status is not Status.OPTIMAL:
        raise NumericalFailure("robust evaluation LP reported infeasible")
    return ValueFunction(out.solution[: rmdp.n_states].copy(), LpExact())


def robust_policy_evaluation(rmdp, policy):
    """Exact robust value of ``policy`` for an RMDP with plain (non-lifted) polytopes."""
    if rmdp.lifted:
        raise ModelError("RMDP has lifted polytopes; use robust_policy_evaluation_lifted")
    return _evaluate(rmdp, policy)


def robust_policy_evaluation_lifted(rmdp, policy):
    """Exact robust value of ``policy`` when every polytope is lifted.

    Auxiliary columns get the extra dual block that forces the dual to
    project onto the real coordinates.
    """
    if not rmdp.lifted:
        raise ModelError("RMDP has no lifted polytopes; use robust_policy_evaluation")
    for key, p in rmdp.uncertainty.items():
        if p.lifted_split != rmdp.n_states:
            raise ModelError(f"polytope at {key} is not lifted at column {rmdp.n_states}")
    return _evaluate(rmdp, policy)


def evaluate_policy(rmdp, policy):
    """Dispatch to the plain or lifted evaluation depending on the RMDP."""
    if rmdp.lifted:
        return robust_policy_evaluation_lifted(rmdp, policy)
    return robust_policy_evaluation(rmdp, policy)
