"""Discounted-sum games solved as robust MDPs.

The antagonist's choice of successor becomes the adversary of an RMDP whose
uncertainty set at ``(s, a)`` is the simplex over the allowed successors. Its
vertices are exactly the antagonist's deterministic choices, so the robust
optimal value equals the max-min game value. Parity games are not handled;
they reduce to discounted-sum games by a standard construction that is not
implemented here.
"""

from robustmdp.model import Rmdp
from robustmdp.solvers import SolverConfig, robust_policy_iteration
from robustmdp.uncertainty import simplex_over_support


def game_to_rmdp(game):
    """RMDP over the game's states, actions, rewards and discount."""
    unc = {(s, a): simplex_over_support(game.successors[(s, a)], game.n_states)
           for s, a in game.pairs()}
    return Rmdp(game.skeleton(), unc)


def game_solution(game, config=SolverConfig()):
    """Protagonist policy and value vector of the game, as ``(Policy, ValueFunction)``."""
    policy, vf, _ = robust_policy_iteration(game_to_rmdp(game), config)
    return policy, vf


def game_value(game, config=SolverConfig()):
    """Max-min discounted value of the game from its initial state."""
    _, vf = game_solution(game, config)
    return vf[game.initial_state]
