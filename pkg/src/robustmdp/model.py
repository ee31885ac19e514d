"""Core domain types: MDPs, polytopes, RMDPs, policies, value functions, games.

States and actions are named by strings externally and addressed by dense
integer indices internally, in declaration order. All types are immutable;
numpy arrays are stored read-only.
"""

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from robustmdp.errors import ModelError

STOCHASTIC_TOL = 1e-9


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _normalize_enabled(enabled, n_states, n_actions):
    if enabled is None:
        return tuple(tuple(range(n_actions)) for _ in range(n_states))
    if len(enabled) != n_states:
        raise ModelError("enabled must list one action set per state")
    out = []
    for s, acts in enumerate(enabled):
        acts = tuple(sorted(set(int(a) for a in acts)))
        if not acts:
            raise ModelError(f"state {s} has no enabled action")
        if acts[0] < 0 or acts[-1] >= n_actions:
            raise ModelError(f"state {s} enables an unknown action")
        out.append(acts)
    return tuple(out)


def _check_common(states, actions, initial_state, discount):
    if not states:
        raise ModelError("a model needs at least one state")
    if not actions:
        raise ModelError("a model needs at least one action")
    if len(set(states)) != len(states) or len(set(actions)) != len(actions):
        raise ModelError("state and action names must be unique")
    if not 0 <= initial_state < len(states):
        raise ModelError("initial state out of range")
    if not 0.0 < discount < 1.0:
        raise ModelError(f"discount must lie in (0, 1), got {discount}")


class _Indexed:
    """Name/index helpers shared by every model type."""

    @property
    def n_states(self):
        return len(self.states)

    @property
    def n_actions(self):
        return len(self.actions)

    def state_index(self, name):
        if isinstance(name, (int, np.integer)):
            return int(name)
        try:
            return self.states.index(name)
        except ValueError:
            raise KeyError(f"unknown state {name!r}") from None

    def action_index(self, name):
        if isinstance(name, (int, np.integer)):
            return int(name)
        try:
            return self.actions.index(name)
        except ValueError:
            raise KeyError(f"unknown action {name!r}") from None

    def pairs(self):
        """Yield every enabled ``(state, action)`` index pair in order."""
        for s, acts in enumerate(self.enabled):
            for a in acts:
                yield s, a

    @property
    def n_pairs(self):
        return sum(len(acts) for acts in self.enabled)


@dataclass(frozen=True, eq=False)
class Mdp(_Indexed):
    """A finite discounted MDP.

    ``transition`` has shape ``(S, A, S)`` and ``reward`` shape ``(S, A)``;
    entries for disabled actions are zero.
    """

    states: Tuple[str, ...]
    actions: Tuple[str, ...]
    transition: np.ndarray
    reward: np.ndarray
    initial_state: int = 0
    discount: float = 0.9
    enabled: Optional[Tuple[Tuple[int, ...], ...]] = None

    def __post_init__(self):
        states = tuple(str(s) for s in self.states)
        actions = tuple(str(a) for a in self.actions)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "discount", float(self.discount))
        object.__setattr__(self, "initial_state", int(self.initial_state))
        _check_common(states, actions, self.initial_state, self.discount)
        S, A = len(states), len(actions)
        enabled = _normalize_enabled(self.enabled, S, A)
        object.__setattr__(self, "enabled", enabled)

        P = np.array(self.transition, dtype=float)
        R = np.array(self.reward, dtype=float)
        if P.shape != (S, A, S):
            raise ModelError(f"transition must have shape {(S, A, S)}, got {P.shape}")
        if R.shape != (S, A):
            raise ModelError(f"reward must have shape {(S, A)}, got {R.shape}")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(R))):
            raise ModelError("transition and reward must be finite")
        mask = np.zeros((S, A), dtype=bool)
        for s, a in self.pairs():
            mask[s, a] = True
        P[~mask] = 0.0
        R[~mask] = 0.0
        if np.any(P < 0.0):
            raise ModelError("transition probabilities must be nonnegative")
        sums = P.sum(axis=2)
        bad = mask & (np.abs(sums - 1.0) > STOCHASTIC_TOL)
        if bad.any():
            s, a = np.argwhere(bad)[0]
            raise ModelError(
                f"P({states[s]}, {actions[a]}) sums to {sums[s, a]!r}, not 1"
            )
        object.__setattr__(self, "transition", _frozen(P))
        object.__setattr__(self, "reward", _frozen(R))

    def __eq__(self, other):
        if not isinstance(other, Mdp):
            return NotImplemented
        return (
            self.states == other.states
            and self.actions == other.actions
            and self.enabled == other.enabled
            and self.initial_state == other.initial_state
            and self.discount == other.discount
            and np.array_equal(self.transition, other.transition)
            and np.array_equal(self.reward, other.reward)
        )

    __hash__ = None

    def skeleton(self):
        return Skeleton(self.states, self.actions, self.reward, self.initial_state,
                        self.discount, self.enabled)

    def induced_chain(self, policy):
        """Transition matrix and reward vector of the chain induced by ``policy``."""
        idx = np.arange(self.n_states)
        choice = np.asarray(policy.choice)
        return self.transition[idx, choice], self.reward[idx, choice]


@dataclass(frozen=True, eq=False)
class Skeleton(_Indexed):
    """An MDP without transition probabilities."""

    states: Tuple[str, ...]
    actions: Tuple[str, ...]
    reward: np.ndarray
    initial_state: int = 0
    discount: float = 0.9
    enabled: Optional[Tuple[Tuple[int, ...], ...]] = None

    def __post_init__(self):
        states = tuple(str(s) for s in self.states)
        actions = tuple(str(a) for a in self.actions)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "discount", float(self.discount))
        object.__setattr__(self, "initial_state", int(self.initial_state))
        _check_common(states, actions, self.initial_state, self.discount)
        enabled = _normalize_enabled(self.enabled, len(states), len(actions))
        object.__setattr__(self, "enabled", enabled)
        R = np.array(self.reward, dtype=float)
        if R.shape != (len(states), len(actions)) or not np.all(np.isfinite(R)):
            raise ModelError("reward must be a finite (S, A) array")
        mask = np.zeros(R.shape, dtype=bool)
        for s, a in self.pairs():
            mask[s, a] = True
        R[~mask] = 0.0
        object.__setattr__(self, "reward", _frozen(R))

    def __eq__(self, other):
        if not isinstance(other, Skeleton):
            return NotImplemented
        return (
            self.states == other.states
            and self.actions == other.actions
            and self.enabled == other.enabled
            and self.initial_state == other.initial_state
            and self.discount == other.discount
            and np.array_equal(self.reward, other.reward)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Polytope:
    """Halfspace polytope ``{x : rows @ x <= rhs, eq_rows @ x = eq_rhs, x >= 0}``.

    Columns address the real coordinates listed in ``support`` (all ``dim``
    coordinates when ``support`` is None) followed by ``n_aux`` auxiliary
    coordinates. Real coordinates outside the support are fixed to zero.
    Nonnegativity of every column is implicit.
    """

    dim: int
    rows: np.ndarray
    rhs: np.ndarray
    eq_rows: np.ndarray = None
    eq_rhs: np.ndarray = None
    n_aux: int = 0
    support: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        dim = int(self.dim)
        if dim < 1:
            raise ModelError("polytope dimension must be positive")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "n_aux", int(self.n_aux))
        if self.support is not None:
            support = tuple(int(i) for i in self.support)
            if sorted(set(support)) != list(support) or not support:
                raise ModelError("support must be a nonempty increasing index list")
            if support[0] < 0 or support[-1] >= dim:
                raise ModelError("support index out of range")
            if len(support) == dim:
                support = None
            object.__setattr__(self, "support", support)
        ncols = self.n_real_cols + self.n_aux
        for rows_name, rhs_name in (("rows", "rhs"), ("eq_rows", "eq_rhs")):
            rows = getattr(self, rows_name)
            rhs = getattr(self, rhs_name)
            rows = np.zeros((0, ncols)) if rows is None else np.array(rows, dtype=float)
            if rows.size == 0:
                rows = rows.reshape(0, ncols)
            rhs = np.zeros(0) if rhs is None else np.array(rhs, dtype=float).reshape(-1)
            if rows.ndim != 2 or rows.shape[1] != ncols or rows.shape[0] != rhs.size:
                raise ModelError(f"polytope {rows_name} shape {rows.shape} inconsistent")
            if not (np.all(np.isfinite(rows)) and np.all(np.isfinite(rhs))):
                raise ModelError("polytope entries must be finite")
            object.__setattr__(self, rows_name, _frozen(rows))
            object.__setattr__(self, rhs_name, _frozen(rhs))
        if self.rows.shape[0] + self.eq_rows.shape[0] == 0:
            raise ModelError("polytope needs at least one constraint row")

    @property
    def support_indices(self):
        return np.arange(self.dim) if self.support is None else np.array(self.support)

    @property
    def n_real_cols(self):
        return self.dim if self.support is None else len(self.support)

    @property
    def n_cols(self):
        return self.n_real_cols + self.n_aux

    @property
    def lifted(self):
        return self.n_aux > 0

    @property
    def lifted_split(self):
        """Column index where auxiliary coordinates start, or None."""
        return self.n_real_cols if self.n_aux else None

    def __eq__(self, other):
        if not isinstance(other, Polytope):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.n_aux == other.n_aux
            and self.support == other.support
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.rhs, other.rhs)
            and np.array_equal(self.eq_rows, other.eq_rows)
            and np.array_equal(self.eq_rhs, other.eq_rhs)
        )

    __hash__ = None

    def canonical(self):
        """Expand to the plain form ``D x <= b`` over all ``dim + n_aux`` coordinates.

        Equalities become paired inequalities, nonnegativity becomes ``-I``
        rows and coordinates outside the support get ``x_i <= 0`` rows.
        """
        full = self.dim + self.n_aux
        cols = np.concatenate([self.support_indices, self.dim + np.arange(self.n_aux)])

        def widen(block):
            out = np.zeros((block.shape[0], full))
            out[:, cols] = block
            return out

        blocks = [widen(self.rows), widen(self.eq_rows), -widen(self.eq_rows), -np.eye(full)]
        rhs = [self.rhs, self.eq_rhs, -self.eq_rhs, np.zeros(full)]
        outside = np.setdiff1d(np.arange(self.dim), self.support_indices)
        if outside.size:
            blocks.append(np.eye(full)[outside])
            rhs.append(np.zeros(outside.size))
        return np.vstack(blocks), np.concatenate(rhs)


@dataclass(frozen=True, eq=False)
class Rmdp(_Indexed):
    """An (s,a)-rectangular robust MDP: one polytope per enabled state-action pair."""

    skeleton: Skeleton
    uncertainty: Mapping[Tuple[int, int], Polytope]

    def __post_init__(self):
        sk = self.skeleton
        unc = {(int(s), int(a)): p for (s, a), p in self.uncertainty.items()}
        expected = set(sk.pairs())
        if set(unc) != expected:
            missing = expected - set(unc)
            extra = set(unc) - expected
            raise ModelError(f"uncertainty keys mismatch (missing {sorted(missing)[:3]}, "
                             f"extra {sorted(extra)[:3]})")
        lifted = {p.lifted for p in unc.values()}
        if len(lifted) > 1:
            raise ModelError("lifted and non-lifted polytopes cannot be mixed in one RMDP")
        for key, p in unc.items():
            if p.dim != sk.n_states:
                raise ModelError(f"polytope at {key} has dimension {p.dim}, expected {sk.n_states}")
        object.__setattr__(self, "uncertainty", dict(sorted(unc.items())))

    states = property(lambda self: self.skeleton.states)
    actions = property(lambda self: self.skeleton.actions)
    enabled = property(lambda self: self.skeleton.enabled)
    reward = property(lambda self: self.skeleton.reward)
    initial_state = property(lambda self: self.skeleton.initial_state)
    discount = property(lambda self: self.skeleton.discount)

    @property
    def lifted(self):
        return any(p.lifted for p in self.uncertainty.values())

    def __eq__(self, other):
        if not isinstance(other, Rmdp):
            return NotImplemented
        return self.skeleton == other.skeleton and self.uncertainty == other.uncertainty

    __hash__ = None


@dataclass(frozen=True)
class Policy:
    """Memoryless deterministic policy: one action index per state."""

    choice: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "choice", tuple(int(a) for a in self.choice))

    def check(self, model):
        if len(self.choice) != model.n_states:
            raise ModelError("policy length does not match the number of states")
        for s, a in enumerate(self.choice):
            if a not in model.enabled[s]:
                raise ModelError(f"policy picks disabled action {a} in state {model.states[s]}")
        return self

    def __getitem__(self, s):
        return self.choice[s]

    def __len__(self):
        return len(self.choice)

    def named(self, model):
        return {model.states[s]: model.actions[a] for s, a in enumerate(self.choice)}


@dataclass(frozen=True)
class LpExact:
    """Values come from an exact (vertex) LP solution."""


@dataclass(frozen=True, eq=False)
class BoundedGap:
    """Values are bracketed by ``lower`` and ``upper``, at most ``eps`` apart."""

    lower: np.ndarray
    upper: np.ndarray
    eps: float
    iterations: int = 0
    gaps: Tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class ValueFunction:
    values: np.ndarray
    certificate: Union[LpExact, BoundedGap] = field(default_factory=LpExact)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        cert = self.certificate
        if isinstance(cert, BoundedGap):
            lo, hi = np.asarray(cert.lower), np.asarray(cert.upper)
            if np.any(lo > self.values) or np.any(self.values > hi):
                raise ModelError("values must lie between the certificate bounds")
            if np.max(hi - lo, initial=0.0) > cert.eps:
                raise ModelError("certificate gap exceeds eps")

    def __getitem__(self, s):
        return float(self.values[s])

    @property
    def exact(self):
        return isinstance(self.certificate, LpExact)


@dataclass(frozen=True, eq=False)
class DiscountedGame(_Indexed):
    """A discounted-sum game on an automaton.

    ``successors[(s, a)]`` lists the states the antagonist may move to.
    """

    states: Tuple[str, ...]
    actions: Tuple[str, ...]
    successors: Mapping[Tuple[int, int], Sequence[int]]
    reward: np.ndarray
    initial_state: int = 0
    discount: float = 0.9
    enabled: Optional[Tuple[Tuple[int, ...], ...]] = None

    def __post_init__(self):
        states = tuple(str(s) for s in self.states)
        actions = tuple(str(a) for a in self.actions)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "discount", float(self.discount))
        object.__setattr__(self, "initial_state", int(self.initial_state))
        _check_common(states, actions, self.initial_state, self.discount)
        S, A = len(states), len(actions)
        enabled = _normalize_enabled(self.enabled, S, A)
        object.__setattr__(self, "enabled", enabled)
        succ = {}
        for s, a in self.pairs():
            targets = self.successors.get((s, a))
            if not targets:
                raise ModelError(f"({states[s]}, {actions[a]}) has no successor")
            targets = tuple(sorted(set(int(t) for t in targets)))
            if targets[0] < 0 or targets[-1] >= S:
                raise ModelError("successor index out of range")
            succ[(s, a)] = targets
        object.__setattr__(self, "successors", succ)
        R = np.array(self.reward, dtype=float)
        if R.shape != (S, A) or not np.all(np.isfinite(R)):
            raise ModelError("reward must be a finite (S, A) array")
        mask = np.zeros((S, A), dtype=bool)
        for s, a in self.pairs():
            mask[s, a] = True
        R[~mask] = 0.0
        object.__setattr__(self, "reward", _frozen(R))

    def __eq__(self, other):
        if not isinstance(other, DiscountedGame):
            return NotImplemented
        return (
            self.states == other.states
            and self.actions == other.actions
            and self.enabled == other.enabled
            and self.initial_state == other.initial_state
            and self.discount == other.discount
            and self.successors == other.successors
            and np.array_equal(self.reward, other.reward)
        )

    __hash__ = None

    def skeleton(self):
        return Skeleton(self.states, self.actions, self.reward, self.initial_state,
                        self.discount, self.enabled)


def point_polytope(p):
    """The polytope whose only point is the distribution ``p``."""
    p = np.asarray(p, dtype=float)
    k = p.size
    eye = np.eye(k)
    return Polytope(k, np.vstack([eye, -eye]), np.concatenate([p, -p]),
                    np.ones((1, k)), np.ones(1))


def mdp_as_degenerate_rmdp(mdp):
    """View an MDP as an RMDP whose uncertainty sets are single points."""
    unc = {(s, a): point_polytope(mdp.transition[s, a]) for s, a in mdp.pairs()}
    return Rmdp(mdp.skeleton(), unc)
