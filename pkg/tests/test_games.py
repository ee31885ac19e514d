import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import game_value_by_enumeration, lasso_value, random_game
from robustmdp.games import game_solution, game_to_rmdp, game_value
from robustmdp.model import DiscountedGame, Policy
from robustmdp.robust_eval import robust_policy_evaluation


def test_self_loop():
    game = DiscountedGame(["s"], ["a"], {(0, 0): [0]}, [[1.0]], 0, 0.9)
    assert game_value(game) == pytest.approx(10.0, abs=1e-9)


def test_single_successors_make_a_deterministic_mdp():
    # s0 -a-> s1 -a-> s1 with rewards 2 and 1
    game = DiscountedGame(["s0", "s1"], ["a"], {(0, 0): [1], (1, 0): [1]},
                          [[2.0], [1.0]], 0, 0.5)
    assert game_value(game) == pytest.approx(2.0 + 0.5 * 2.0, abs=1e-9)


def test_antagonist_picks_the_worse_successor():
    # from s0 the antagonist can stay (reward 1 forever) or drop into the 0 sink
    game = DiscountedGame(["s0", "sink"], ["a"], {(0, 0): [0, 1], (1, 0): [1]},
                          [[1.0], [0.0]], 0, 0.9)
    assert game_value(game) == pytest.approx(1.0, abs=1e-9)


def test_protagonist_avoids_the_trap():
    # action "risky" lets the antagonist reach a -5 sink; "safe" loops on 0
    game = DiscountedGame(["s0", "trap"], ["safe", "risky"],
                          {(0, 0): [0], (0, 1): [0, 1], (1, 0): [1], (1, 1): [1]},
                          [[0.0, 0.0], [-5.0, -5.0]], 0, 0.9)
    policy, vf = game_solution(game)
    assert vf[0] == pytest.approx(0.0, abs=1e-9)
    assert game.actions[policy[0]] == "safe"
    assert vf[1] == pytest.approx(-50.0, abs=1e-9)


def test_uncertainty_sets_are_successor_simplices():
    game = DiscountedGame(["s0", "s1", "s2"], ["a"],
                          {(0, 0): [1, 2], (1, 0): [1], (2, 0): [2]}, np.zeros((3, 1)))
    poly = game_to_rmdp(game).uncertainty[(0, 0)]
    assert poly.dim == 3
    assert list(poly.support_indices) == [1, 2]


def test_lasso_oracle_closed_form():
    # alternate s0 -> s1 -> s0 with rewards 1 and 0: 1 / (1 - gamma^2)
    game = DiscountedGame(["s0", "s1"], ["a"], {(0, 0): [1], (1, 0): [0]},
                          [[1.0], [0.0]], 0, 0.5)
    assert lasso_value(game, (0, 0), {(0, 0): 1, (1, 0): 0}, 0) == pytest.approx(4 / 3)
    assert game_value(game) == pytest.approx(4 / 3, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 3))
def test_matches_strategy_enumeration(seed, S, A):
    game = random_game(np.random.default_rng(seed), S, A, max_succ=3)
    assert game_value(game) == pytest.approx(game_value_by_enumeration(game), abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(1, 2))
def test_more_antagonist_choices_never_help(seed, S, A):
    rng = np.random.default_rng(seed)
    game = random_game(rng, S, A, max_succ=2)
    extra = {k: list(v) + [int(rng.integers(S))] for k, v in game.successors.items()}
    wider = DiscountedGame(game.states, game.actions, extra, game.reward, 0, game.discount)
    assert np.all(game_solution(wider)[1].values <= game_solution(game)[1].values + 1e-8)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 3))
def test_optimal_value_dominates_every_policy(seed, S, A):
    rng = np.random.default_rng(seed)
    game = random_game(rng, S, A)
    rmdp = game_to_rmdp(game)
    best = game_solution(game)[1].values
    for _ in range(3):
        policy = Policy(rng.integers(A, size=S))
        assert np.all(robust_policy_evaluation(rmdp, policy).values <= best + 1e-8)
