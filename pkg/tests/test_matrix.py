import io
import itertools

import numpy as np
import pytest

from colosseum.core import ConfigError, EnvConfig, IllegalMoveError, StateError, make_env
from colosseum.envs.matrix import (
    RPS_ACTIONS,
    load_tensor,
    random_payoff,
    rps_outcome,
    rps_tensor,
    save_tensor,
    zero_sum_project,
)


def test_random_payoff_range_and_determinism():
    a = random_payoff((2, 3, 4), seed=5, zero_sum=False)
    b = random_payoff((2, 3, 4), seed=5, zero_sum=False)
    assert a.entries.shape == (2, 3, 4, 3)
    assert np.array_equal(a.entries, b.entries)
    assert np.all(a.entries >= 0.0) and np.all(a.entries < 1.0)
    c = random_payoff((2, 3, 4), seed=6, zero_sum=False)
    assert not np.array_equal(a.entries, c.entries)


def test_zero_sum_tensor_sums_vanish():
    for shape in [(2, 2), (3, 3, 3), (2, 3, 4, 2)]:
        t = random_payoff(shape, seed=9, zero_sum=True)
        sums = t.entries.sum(axis=-1)
        assert np.max(np.abs(sums)) < 1e-9


def test_zero_sum_projection_idempotent():
    rng = np.random.default_rng(3)
    entries = rng.random((4, 2, 3, 3))
    once = zero_sum_project(entries)
    assert np.allclose(zero_sum_project(once), once, rtol=0.0, atol=1e-15)
    # projection only shifts each payoff vector
    diffs = entries - once
    assert np.allclose(diffs, diffs[..., :1])


def test_random_payoff_rejects_bad_shapes():
    with pytest.raises(ConfigError):
        random_payoff((), seed=0, zero_sum=False)
    with pytest.raises(ConfigError):
        random_payoff((3,), seed=0, zero_sum=False)
    with pytest.raises(ConfigError):
        random_payoff((3, 0), seed=0, zero_sum=False)


def oracle_rps3(actions, win, lose, tie):
    """Independent restatement of the 3-player rule: the holder of the one
    action nobody else picked wins; all-same or all-distinct ties."""
    counts = {a: actions.count(a) for a in set(actions)}
    unique = [a for a, k in counts.items() if k == 1]
    if len(unique) != 1:
        return {i: tie for i in range(3)}
    winner = actions.index(unique[0])
    return {i: (win if i == winner else lose) for i in range(3)}


def test_rps_three_player_truth_table():
    for joint in itertools.product(RPS_ACTIONS, repeat=3):
        got = rps_outcome(list(joint), 1.0, -1.0, 0.0)
        assert got == oracle_rps3(list(joint), 1.0, -1.0, 0.0), joint
    # the doubled-up pair loses to the odd one out
    assert rps_outcome(["R", "R", "P"], 2.0, -1.0, 0.5) == {0: -1.0, 1: -1.0, 2: 2.0}
    assert rps_outcome(["R", "P", "S"], 1.0, -1.0, 0.0) == {0: 0.0, 1: 0.0, 2: 0.0}
    assert rps_outcome(["S", "S", "S"], 1.0, -1.0, 0.0) == {0: 0.0, 1: 0.0, 2: 0.0}


def test_rps_two_player_cycle():
    beats = {("R", "S"), ("S", "P"), ("P", "R")}
    for a, b in itertools.product(RPS_ACTIONS, repeat=2):
        got = rps_outcome([a, b], 1.0, -1.0, 0.0)
        if a == b:
            assert got == {0: 0.0, 1: 0.0}
        elif (a, b) in beats:
            assert got == {0: 1.0, 1: -1.0}
        else:
            assert got == {0: -1.0, 1: 1.0}


def test_rps_tensor_permutation_symmetry():
    t = rps_tensor(3, 1.0, -1.0, 0.0).entries
    for joint in itertools.product(range(3), repeat=3):
        for perm in itertools.permutations(range(3)):
            permuted = tuple(joint[perm[i]] for i in range(3))
            for p in range(3):
                assert t[permuted + (p,)] == t[joint + (perm[p],)]


def test_rps_env_agrees_with_outcome_rule():
    env = make_env(EnvConfig("rps", 3, params={"win": 2.0, "lose": -1.0, "tie": 0.25}))
    for joint in itertools.product(RPS_ACTIONS, repeat=3):
        result = env.step(env.new_game(), dict(enumerate(joint)))
        assert result.terminal
        assert result.rewards == rps_outcome(list(joint), 2.0, -1.0, 0.25), joint


def test_matrix_env_step_is_tensor_lookup():
    env = make_env(EnvConfig("matrix", 3, rng_seed=17, params={"shape": (2, 3, 2)}))
    tensor = env.tensor.entries
    for joint in itertools.product(range(2), range(3), range(2)):
        result = env.step(env.new_game(), dict(enumerate(joint)))
        assert result.terminal
        for p in range(3):
            assert result.rewards[p] == tensor[joint + (p,)]


def test_one_shot_lifecycle_and_rankings():
    env = make_env(EnvConfig("rps", 2))
    state = env.new_game()
    assert env.current_players(state) == frozenset({0, 1})
    assert env.legal_actions(state, 0) == list(RPS_ACTIONS)
    result = env.step(state, {0: "P", 1: "R"})
    record = env.rankings(result.next_state)
    assert record.ranks == {0: 1, 1: 2}
    assert record.total_reward == {0: 1.0, 1: -1.0}
    tie = env.step(state, {0: "P", 1: "P"})
    assert env.rankings(tie.next_state).ranks == {0: 2, 1: 2}
    with pytest.raises(StateError):
        env.step(result.next_state, {0: "R", 1: "R"})
    with pytest.raises(StateError):
        env.rankings(state)


def test_bad_actions_rejected():
    rps = make_env(EnvConfig("rps", 2))
    with pytest.raises(IllegalMoveError):
        rps.step(rps.new_game(), {0: "X", 1: "R"})
    mat = make_env(EnvConfig("matrix", 2, params={"shape": (2, 2)}))
    with pytest.raises(IllegalMoveError):
        mat.step(mat.new_game(), {0: 2, 1: 0})
    with pytest.raises(ConfigError):
        make_env(EnvConfig("matrix", 3, params={"shape": (2, 2)}))
    with pytest.raises(ConfigError):
        make_env(EnvConfig("rps", 4))


def test_tensor_file_round_trip():
    t = random_payoff((2, 3), seed=21, zero_sum=True)
    buf = io.StringIO()
    save_tensor(t, buf, seed=21)
    buf.seek(0)
    back = load_tensor(buf)
    assert back.zero_sum == t.zero_sum
    assert np.array_equal(back.entries, t.entries)  # repr round-trips floats


def test_matrix_state_json_round_trip():
    env = make_env(EnvConfig("matrix", 2, params={"shape": (2, 2)}))
    state = env.step(env.new_game(), {0: 1, 1: 0}).next_state
    assert env.state_from_json(env.state_to_json(state)) == state
    assert env.state_from_json(env.state_to_json(env.new_game())) == env.new_game()


def test_observation_exposes_full_tensor():
    env = make_env(EnvConfig("rps", 3, params={"win": 3.0, "lose": -1.0, "tie": 0.0}))
    obs = env.observe(env.new_game(), 1)
    expect = rps_tensor(3, 3.0, -1.0, 0.0).entries
    assert np.array_equal(obs.tensor.entries, expect)
    assert obs.player == 1
