"""Decision environments, action masking, and tabular Q-learning."""

import random

import pytest

from bpkit import BProgram, BThread, Event, sync
from bpkit.bprogram import Execution, run_scripted
from bpkit.examples import chessboard, apply_flip, pancake
from bpkit import rlenv
from bpkit.rlenv import (
    BitflipEnv,
    BProgramEnv,
    IllegalAction,
    Observation,
    StateSpaceTooLarge,
    evaluate,
    greedy_bitflip_action,
    greedy_policy_chooser,
    pancake_env,
    random_masked_action,
    rollout,
    train_tabular_q,
)

A, B = Event("A"), Event("B")


def _single_action_program():
    def only():
        yield sync(request=A, localReward=1.0)

    return BProgram([BThread("only", only)])


# --------------------------------------------------------------------------
# Discrete environment
# --------------------------------------------------------------------------


def test_mask_matches_enabled_events():
    env = pancake_env(2, 1)
    env.reset(seed=0)
    rng = random.Random(0)
    # shadow execution advanced with the same events must agree on masks
    shadow = Execution(pancake(2, 1))
    for _ in range(8):
        if env.done:
            break
        mask = env.action_mask()
        enabled = set(shadow.enabled())
        for i, e in enumerate(env.universe):
            assert mask[i] == (e in enabled)
        action = random_masked_action(mask, rng)
        env.step(action)
        shadow.advance(env.universe[action])


def test_illegal_actions_raise():
    env = pancake_env(2, 1)
    with pytest.raises(IllegalAction):
        env.step(0)  # not reset
    env.reset(seed=0)
    mask = env.action_mask()
    blocked = mask.index(False)
    with pytest.raises(IllegalAction):
        env.step(blocked)
    with pytest.raises(IllegalAction):
        env.step(len(env.universe))


def test_done_mask_is_all_false():
    env = BProgramEnv(_single_action_program, [A, B])
    env.reset(seed=0)
    res = env.step(0)
    assert res.done
    assert res.action_mask == (False, False)
    with pytest.raises(IllegalAction):
        env.step(0)


def test_env_rewards_match_core_replay():
    env = pancake_env(2, 1)
    rng = random.Random(42)
    env.reset(seed=0)
    events, rewards = [], []
    while not env.done:
        action = random_masked_action(env.action_mask(), rng)
        res = env.step(action)
        events.append(env.universe[action])
        rewards.append(res.reward)
    trace = run_scripted(pancake(2, 1), events)
    assert rewards == trace.rewards


def test_observation_is_stable_per_state():
    env = pancake_env(2, 1)
    o1 = env.reset(seed=0)
    o2 = env.reset(seed=1)
    assert isinstance(o1, Observation)
    assert o1 == o2  # same initial snapshot indices regardless of seed


def test_observe_threads_filters_slots():
    env = BProgramEnv(
        lambda: pancake(2, 1),
        universe=pancake_env(2, 1).universe,
        observe_threads=["blueberries"],
    )
    obs = env.reset(seed=0)
    assert len(obs.indices) == 1


# --------------------------------------------------------------------------
# Q-learning
# --------------------------------------------------------------------------


def test_train_single_action_env_converges():
    env = BProgramEnv(_single_action_program, [A])
    result = train_tabular_q(env, episodes=10, alpha=0.5, seed=0)
    assert result.rows[-1][1] == pytest.approx(1.0)
    obs = env.reset(seed=0)
    assert result.policy[obs] == 0


def test_train_is_bit_reproducible():
    r1 = train_tabular_q(pancake_env(2, 1), episodes=30, seed=4)
    r2 = train_tabular_q(pancake_env(2, 1), episodes=30, seed=4)
    assert r1.q == r2.q
    assert r1.rows == r2.rows
    r3 = train_tabular_q(pancake_env(2, 1), episodes=30, seed=5)
    assert r1.rows != r3.rows


def test_train_epsilon_decays_linearly():
    result = train_tabular_q(pancake_env(2, 1), episodes=5, epsilon=0.4, seed=0)
    eps = [row[2] for row in result.rows]
    assert eps[0] == pytest.approx(0.4)
    assert eps[-1] == pytest.approx(0.05)
    deltas = {round(a - b, 12) for a, b in zip(eps, eps[1:])}
    assert len(deltas) == 1


def test_train_csv_format():
    result = train_tabular_q(pancake_env(2, 1), episodes=3, seed=0)
    lines = result.csv().strip().splitlines()
    assert lines[0] == "episode,cumulative_reward,epsilon"
    assert len(lines) == 4
    assert lines[1].startswith("0,")


def test_q_table_cap(monkeypatch):
    monkeypatch.setattr(rlenv, "Q_TABLE_CAP", 0)
    with pytest.raises(StateSpaceTooLarge):
        train_tabular_q(pancake_env(2, 1), episodes=2, seed=0)


def test_train_validates_episodes():
    with pytest.raises(ValueError):
        train_tabular_q(pancake_env(2, 1), episodes=0)


def test_rollout_and_evaluate():
    env = pancake_env(2, 1)
    result = train_tabular_q(env, episodes=200, alpha=0.2, epsilon=0.3, seed=0)
    reward, steps = rollout(env, greedy_policy_chooser(result), seed=0)
    assert steps > 0
    mean = evaluate(env, greedy_policy_chooser(result), episodes=5, seed=0)
    assert mean == pytest.approx(reward)  # deterministic program, greedy policy


# --------------------------------------------------------------------------
# Bit-flip environment
# --------------------------------------------------------------------------


def test_bitflip_env_turn_masks_and_board():
    env = BitflipEnv(2, 2, rounds=2)
    env.reset(seed=0)
    assert env.turn == "row"
    assert env.action_mask() == (True, True, False, False)
    before = env.board()
    res = env.step(0)
    assert env.turn == "col"
    assert res.action_mask == (False, False, True, True)
    after = env.board()
    # our row flip then the opponent's column flip separate before/after
    diffs = sum(
        after[i][j] != before[i][j] for i in range(2) for j in range(2)
    )
    assert diffs in (0, 2, 4)


def test_bitflip_env_episode_length():
    env = BitflipEnv(2, 2, rounds=2)
    env.reset(seed=1)
    steps = 0
    while not env.done:
        res = env.step(greedy_bitflip_action(env))
        steps += 1
    assert steps == 2 * 2  # one row + one col action per round
    assert res.done


def test_bitflip_env_rejects_wrong_turn():
    env = BitflipEnv(2, 2, rounds=1)
    env.reset(seed=0)
    with pytest.raises(IllegalAction):
        env.step(2)  # column action on a row turn


def test_bitflip_env_reset_reproducible():
    def play(seed):
        env = BitflipEnv(2, 2, rounds=2)
        env.reset(seed=seed)
        boards = [env.board()]
        while not env.done:
            env.step(greedy_bitflip_action(env))
            boards.append(env.board())
        return boards

    assert play(7) == play(7)
    assert play(7) != play(8)


def test_bitflip_initial_board_is_chessboard():
    env = BitflipEnv(2, 3, rounds=1)
    env.reset(seed=0)
    # the opponent has already flipped one row of the chess start
    start = chessboard(2, 3)
    candidates = [apply_flip(start, "row", i) for i in range(2)]
    assert env.board() in candidates


def test_greedy_bitflip_action_targets_most_off_bits():
    env = BitflipEnv(2, 2, rounds=1)
    env.reset(seed=0)
    board = env.board()
    action = greedy_bitflip_action(env)
    assert 0 <= action < 2
    zeros = [sum(1 for v in board[i] if not v) for i in range(2)]
    assert zeros[action] == max(zeros)


def test_random_masked_action_respects_mask():
    rng = random.Random(0)
    for _ in range(50):
        assert random_masked_action((False, True, False), rng) == 1
    with pytest.raises(IllegalAction):
        random_masked_action((False, False), rng)
