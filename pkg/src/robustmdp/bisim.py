"""Bisimulation metrics between states of one MDP.

Two engines compute the same least fixed point:

* :func:`bisim_fixed_point` iterates the operator
  ``F(d)(s, t) = max_a c_R |R(s, a) - R(t, a)| + c_T K(d)(P(s, a), P(t, a))``
  from ``d = 0``, where ``K`` is the Kantorovich distance.
* :func:`build_bisim_rmdp` materializes a product RMDP over state pairs whose
  uncertainty sets are coupling polytopes; its robust optimal value is the
  metric, so any robust solver applies (see :func:`bisim_via_rpi`).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from robustmdp._parallel import ordered_map
from robustmdp.errors import ActionMismatch, IterationCapExceeded, ModelError, NumericalFailure
from robustmdp.lp import Status, solve_lp
from robustmdp.model import Rmdp, Skeleton
from robustmdp.solvers import SolverConfig, robust_policy_iteration, robust_value_iteration
from robustmdp.uncertainty import coupling_polytope, polytope_lp

PSEUDOMETRIC_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class Pseudometric:
    """A symmetric distance table with zero diagonal (distinct states may be at distance 0)."""

    table: np.ndarray
    iterations: Optional[int] = None

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ModelError("a pseudometric table must be square")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def __getitem__(self, key):
        return float(self.table[key])

    def violations(self, tol=PSEUDOMETRIC_TOL):
        """Names of the pseudometric axioms that fail at tolerance ``tol``."""
        t = self.table
        out = []
        if np.any(np.abs(np.diag(t)) > tol):
            out.append("identity")
        if np.any(t < -tol):
            out.append("nonnegativity")
        if np.any(np.abs(t - t.T) > tol):
            out.append("symmetry")
        # d(i, k) <= d(i, j) + d(j, k) for all triples
        via = t[:, :, None] + t[None, :, :]
        if np.any(t[:, None, :] > via + tol):
            out.append("triangle")
        return out


@dataclass(frozen=True)
class BisimWeights:
    """Weights of the reward and transition terms; ``None`` fields default to ``(1 - gamma, gamma)``."""

    c_R: Optional[float] = None
    c_T: Optional[float] = None

    def resolve(self, gamma):
        c_R = 1.0 - gamma if self.c_R is None else float(self.c_R)
        c_T = gamma if self.c_T is None else float(self.c_T)
        if c_R < 0 or c_T < 0 or c_R + c_T > 1.0 + 1e-12:
            raise ModelError("bisimulation weights must be nonnegative with c_R + c_T <= 1")
        return c_R, c_T


def kantorovich_distance(d, mu, nu):
    """Kantorovich distance between ``mu`` and ``nu`` under ground distance ``d``.

    Returns ``(value, coupling)`` where ``coupling`` is a ``k x k`` minimal coupling.
    """
    table = d.table if isinstance(d, Pseudometric) else np.asarray(d, dtype=float)
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    k = mu.size
    if table.shape != (k, k) or nu.size != k:
        raise ModelError("distributions and distance table have mismatched sizes")
    rs = np.flatnonzero(mu > 0.0)
    cs = np.flatnonzero(nu > 0.0)
    coupling = np.zeros((k, k))
    if rs.size == 1 or cs.size == 1:
        # the coupling is forced: the product of the marginals
        coupling[np.ix_(rs, cs)] = np.outer(mu[rs], nu[cs])
        return float(np.sum(coupling * table)), coupling
    poly = coupling_polytope(mu, nu, restrict_support=True)
    out = solve_lp(polytope_lp(poly, table.ravel()))
    if out.status is not Status.OPTIMAL:
        raise NumericalFailure(f"Kantorovich LP ended with status {out.status.name}")
    coupling.ravel()[poly.support_indices] = out.solution
    return float(np.sum(coupling * table)), coupling


def _common_actions(mdp):
    acts = mdp.enabled[0]
    for s, other in enumerate(mdp.enabled):
        if other != acts:
            raise ActionMismatch(
                f"states {mdp.states[0]!r} and {mdp.states[s]!r} enable different actions")
    return acts


def _state(mdp, s):
    return s if isinstance(s, (int, np.integer)) else mdp.state_index(s)


def bisim_fixed_point(mdp, weights=BisimWeights(), eps=1e-6, cap=100_000, threads=None):
    """Least fixed point of the bisimulation operator by iteration from zero.

    Stops once successive iterates differ by at most ``eps * (1 - c_T) / c_T``
    in sup norm, so the result is within ``eps`` of the fixed point. The
    returned :class:`Pseudometric` records the number of operator
    applications in ``iterations``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    acts = _common_actions(mdp)
    c_R, c_T = weights.resolve(mdp.discount)
    n = mdp.n_states
    P, R = mdp.transition, mdp.reward
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    reward_gap = {(i, j): c_R * np.abs(R[i, list(acts)] - R[j, list(acts)]) for i, j in pairs}
    stop = eps * (1.0 - c_T) / c_T if c_T > 0 else np.inf
    d = np.zeros((n, n))
    for it in range(1, cap + 1):
        def update(pair, d=d):
            i, j = pair
            trans = [kantorovich_distance(d, P[i, a], P[j, a])[0] for a in acts]
            return float(np.max(reward_gap[pair] + c_T * np.array(trans)))

        new = np.zeros((n, n))
        for (i, j), val in zip(pairs, ordered_map(update, pairs, threads)):
            new[i, j] = new[j, i] = val
        change = float(np.max(np.abs(new - d), initial=0.0))
        d = new
        if change <= stop:
            return Pseudometric(d, it)
    raise IterationCapExceeded(f"bisimulation iteration did not settle within {cap} steps",
                               Pseudometric(d, cap))


def product_state(mdp, s1, s2):
    """Index of the pair ``<s1, s2>`` in :func:`build_bisim_rmdp`'s state space."""
    return _state(mdp, s1) * mdp.n_states + _state(mdp, s2)


def build_bisim_rmdp(mdp, s1=0, s2=0, weights=BisimWeights()):
    """Product RMDP whose robust optimal value at ``<s, t>`` is the metric ``d(s, t)``.

    States are pairs named ``"s|t"`` at index ``s * n + t``; each uncertainty set is
    the coupling polytope of ``P(s, a)`` and ``P(t, a)``, rewards are
    ``c_R |R(s, a) - R(t, a)|`` and the discount is ``c_T``.
    """
    acts = _common_actions(mdp)
    c_R, c_T = weights.resolve(mdp.discount)
    if not 0.0 < c_T < 1.0:
        raise ModelError("the product RMDP needs 0 < c_T < 1")
    n = mdp.n_states
    names = [f"{a}|{b}" for a in mdp.states for b in mdp.states]
    R = mdp.reward
    reward = np.zeros((n * n, mdp.n_actions))
    unc = {}
    for i in range(n):
        for j in range(n):
            t = i * n + j
            for a in acts:
                reward[t, a] = c_R * abs(R[i, a] - R[j, a])
                unc[(t, a)] = coupling_polytope(mdp.transition[i, a], mdp.transition[j, a],
                                                restrict_support=True)
    skel = Skeleton(names, mdp.actions, reward, product_state(mdp, s1, s2), c_T,
                    [acts] * (n * n))
    return Rmdp(skel, unc)


def _table(mdp, values):
    n = mdp.n_states
    return np.asarray(values, dtype=float).reshape(n, n)


def bisim_table_via_rpi(mdp, weights=BisimWeights(), config=SolverConfig()):
    """Whole metric table from robust policy iteration on the product RMDP.

    Returns ``(Pseudometric, RpiTrace)``.
    """
    rmdp = build_bisim_rmdp(mdp, weights=weights)
    _, vf, trace = robust_policy_iteration(rmdp, config)
    return Pseudometric(_table(mdp, vf.values), trace.iterations), trace


def bisim_via_rpi(mdp, s1, s2, config=SolverConfig(), weights=BisimWeights()):
    """Metric value ``d(s1, s2)`` from robust policy iteration on the product RMDP."""
    if _state(mdp, s1) == _state(mdp, s2):
        _common_actions(mdp)
        return 0.0
    rmdp = build_bisim_rmdp(mdp, s1, s2, weights)
    _, vf, _ = robust_policy_iteration(rmdp, config)
    return vf[rmdp.initial_state]


def bisim_table_via_rvi(mdp, weights=BisimWeights(), config=SolverConfig()):
    """Whole metric table from robust value iteration on the product RMDP.

    Returns ``(Pseudometric, ValueFunction)``; the value function carries the
    bounds certificate.
    """
    rmdp = build_bisim_rmdp(mdp, weights=weights)
    vf = robust_value_iteration(rmdp, config)
    return Pseudometric(_table(mdp, vf.values), vf.certificate.iterations), vf
