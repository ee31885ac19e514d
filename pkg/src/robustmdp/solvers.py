"""Robust policy iteration, robust bounded value iteration and the threshold problem."""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from robustmdp.errors import IterationCapExceeded, IterationCapWarning
from robustmdp.model import BoundedGap, Policy, ValueFunction
from robustmdp.robust_eval import evaluate_policy, robust_bellman_apply, robust_q_values

log = logging.getLogger(__name__)

NO_IMPROVING_ACTION = "no_improving_action"
ITERATION_CAP = "iteration_cap"

_MASK64 = (1 << 64) - 1


class XorShift64Star:
    """xorshift64* generator, seeded through one splitmix64 step.

    Used instead of numpy so that seeded initial policies are reproducible
    across numpy versions and platforms.
    """

    def __init__(self, seed):
        z = (int(seed) + 0x9E3779B97F4A7C15) & _MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        self.state = (z ^ (z >> 31)) or 0x2545F4914F6CDD1D

    def next(self):
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64

    def below(self, n):
        return self.next() % n


@dataclass(frozen=True)
class SolverConfig:
    """Shared knobs for the iterative solvers.

    ``initial_policy`` is ``"first"`` (lowest enabled action everywhere) or
    ``"seeded"`` (uniform choice driven by :class:`XorShift64Star` with ``seed``).
    """

    eps: float = 1e-6
    improvement_margin: float = 1e-7
    iteration_cap: int = 10_000
    initial_policy: str = "first"
    seed: int = 0
    use_optimality_test: bool = False
    threads: Optional[int] = None

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.initial_policy not in ("first", "seeded"):
            raise ValueError(f"unknown initial policy {self.initial_policy!r}")
        if self.iteration_cap < 1:
            raise ValueError("iteration_cap must be at least 1")


def initial_policy(model, config):
    if config.initial_policy == "first":
        return Policy([acts[0] for acts in model.enabled])
    rng = XorShift64Star(config.seed)
    return Policy([acts[rng.below(len(acts))] for acts in model.enabled])


@dataclass(frozen=True, eq=False)
class RpiStep:
    policy: Policy
    values: np.ndarray
    deltas: np.ndarray
    surviving: Tuple[Tuple[int, ...], ...]


@dataclass(eq=False)
class RpiTrace:
    iterations: int = 0
    steps: List[RpiStep] = field(default_factory=list)
    terminated_by: str = ""


def suboptimality_filter(deltas, gamma, current_sets, tol=0.0):
    """Drop actions that can be proven suboptimal from normalized values.

    Keeps ``a`` in state ``s`` iff ``deltas[s, a] >= max_a' deltas[s, a'] -
    gamma / (1 - gamma) * span`` where ``span`` is the spread of the per-state
    maxima. Only actions in ``current_sets`` are considered.
    """
    deltas = np.asarray(deltas, dtype=float)
    best = np.array([max(deltas[s, a] for a in acts) for s, acts in enumerate(current_sets)])
    span = best.max() - best.min()
    threshold = best - gamma / (1.0 - gamma) * span
    return tuple(
        tuple(a for a in acts if deltas[s, a] >= threshold[s] - tol)
        for s, acts in enumerate(current_sets)
    )


def _greedy(deltas, surviving, incumbent, margin):
    choice = list(incumbent.choice)
    for s, acts in enumerate(surviving):
        vals = np.array([deltas[s, a] for a in acts])
        top = vals.max()
        if top <= margin:
            continue
        tie = top - 1e-12 * (1.0 + abs(top))
        maximizers = [a for a, d in zip(acts, vals) if d >= tie]
        choice[s] = incumbent[s] if incumbent[s] in maximizers else min(maximizers)
    return Policy(choice)


def robust_policy_iteration(rmdp, config=SolverConfig()):
    """Robust policy iteration with exact LP evaluation.

    Returns ``(policy, value_function, trace)``. With
    ``config.use_optimality_test`` provably suboptimal actions are discarded
    for good after each improvement step. Hitting the iteration cap emits an
    :class:`IterationCapWarning` and returns the last evaluated policy.
    """
    gamma = rmdp.discount
    margin = config.improvement_margin
    policy = initial_policy(rmdp, config).check(rmdp)
    surviving = tuple(tuple(acts) for acts in rmdp.enabled)
    trace = RpiTrace()
    for k in range(1, config.iteration_cap + 1):
        vf = evaluate_policy(rmdp, policy)
        v = vf.values
        q = robust_q_values(rmdp, v, actions=surviving, threads=config.threads)
        deltas = q - v[:, None]
        trace.iterations = k
        trace.steps.append(RpiStep(policy, v, deltas, surviving))
        improving = any(deltas[s, a] > margin for s, acts in enumerate(surviving) for a in acts)
        log.debug("rpi iteration %d: value at initial %.9g", k, v[rmdp.initial_state])
        if not improving:
            trace.terminated_by = NO_IMPROVING_ACTION
            return policy, vf, trace
        new_policy = _greedy(deltas, surviving, policy, margin)
        if config.use_optimality_test:
            surviving = suboptimality_filter(deltas, gamma, surviving, tol=margin)
            surviving = tuple(
                acts if new_policy[s] in acts else tuple(sorted(acts + (new_policy[s],)))
                for s, acts in enumerate(surviving)
            )
        policy = new_policy
    trace.terminated_by = ITERATION_CAP
    warnings.warn(f"robust policy iteration stopped at the cap of {config.iteration_cap} "
                  "iterations", IterationCapWarning, stacklevel=2)
    return trace.steps[-1].policy, ValueFunction(trace.steps[-1].values), trace


def rpi_iteration_bound(model, count_pairs=True):
    """``T * (|A| - |S|)`` with ``T = floor(|S| / (1 - gamma) * log(|S|^2 / (1 - gamma))) + 1``.

    With ``count_pairs`` the action count is the number of enabled
    state-action pairs; otherwise it is the size of the global action set.
    Returns None when the bound is not positive.
    """
    S = model.n_states
    gamma = model.discount
    T = math.floor(S / (1.0 - gamma) * math.log(S * S / (1.0 - gamma))) + 1
    n_act = model.n_pairs if count_pairs else model.n_actions
    bound = T * (n_act - S)
    return bound if bound > 0 else None


def robust_value_iteration(rmdp, config=SolverConfig()):
    """Robust bounded value iteration.

    Iterates the robust Bellman operator from a constant lower bound
    ``min R / (1 - gamma)`` and a constant upper bound ``max R / (1 - gamma)``
    until the two are within ``config.eps``; returns their midpoint.
    """
    gamma = rmdp.discount
    rewards = np.array([rmdp.reward[s, a] for s, a in rmdp.pairs()])
    lower = np.full(rmdp.n_states, rewards.min() / (1.0 - gamma))
    upper = np.full(rmdp.n_states, rewards.max() / (1.0 - gamma))
    gaps = [float(np.max(upper - lower))]
    it = 0
    while gaps[-1] > config.eps:
        if it >= config.iteration_cap:
            partial = ValueFunction((lower + upper) / 2,
                                    BoundedGap(lower, upper, gaps[-1], it, tuple(gaps)))
            raise IterationCapExceeded(
                f"value iteration gap {gaps[-1]:.3g} above eps after {it} iterations", partial)
        lower = np.maximum(lower, robust_bellman_apply(rmdp, lower, threads=config.threads))
        upper = np.minimum(upper, robust_bellman_apply(rmdp, upper, threads=config.threads))
        it += 1
        gaps.append(float(np.max(upper - lower)))
    values = np.clip((lower + upper) / 2, lower, upper)
    return ValueFunction(values, BoundedGap(lower, upper, config.eps, it, tuple(gaps)))


@dataclass(frozen=True, eq=False)
class ThresholdYes:
    policy: Policy
    value: float

    def __bool__(self):
        return True


@dataclass(frozen=True, eq=False)
class ThresholdNo:
    bound: float

    def __bool__(self):
        return False


def threshold_decision(rmdp, kappa, config=SolverConfig()):
    """Is there a policy whose robust value at the initial state is at least ``kappa``?"""
    policy, vf, _ = robust_policy_iteration(rmdp, config)
    value = vf[rmdp.initial_state]
    if value >= kappa - config.improvement_margin:
        return ThresholdYes(policy, value)
    return ThresholdNo(value)
