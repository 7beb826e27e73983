"""Episodic decision environments over b-programs, plus tabular Q-learning.

An environment exposes reset/step with a boolean action mask derived
from the blocking semantics: an action is legal exactly when its event
is currently enabled (discrete envs) or its constrained solve is
feasible (solver envs).  Rewards are the localReward sums of the active
statements at each selected event.  Observations are vectors of
per-b-thread state indices, assigned on first sight of each distinct
generator snapshot.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .analysis import derive_seed
from .bprogram import BProgram, Execution, snapshot_generator
from .choice import sample
from .events import Event
from .examples import (
    BLUEBERRIES,
    DRY,
    THICK_DOWN,
    THICK_UP,
    WET,
    SolverProgram,
    apply_flip,
    bitflip_two_player,
    board_from_assignment,
    pancake,
)
from .smt import formula as F
from .smt.runner import SmtExecution
from .smt.solver import BUILTIN, SolverConfig, solve


class IllegalAction(ValueError):
    pass


class StateSpaceTooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class Observation:
    """Per-b-thread state indices, fixed length = number of observed threads."""

    indices: tuple[int, ...]


@dataclass
class StepResult:
    observation: Observation
    reward: float
    done: bool
    action_mask: tuple[bool, ...]


class _SnapshotIndexer:
    """Stable small integers for generator snapshots, per thread slot."""

    def __init__(self, n_threads: int):
        self._maps: list[dict] = [{} for _ in range(n_threads)]

    def index(self, slot: int, snapshot) -> int:
        m = self._maps[slot]
        if snapshot not in m:
            m[snapshot] = len(m)
        return m[snapshot]


# --------------------------------------------------------------------------
# Discrete environment
# --------------------------------------------------------------------------


class BProgramEnv:
    """A discrete b-program as an environment; actions are universe indices."""

    def __init__(
        self,
        make_program: Callable[[], BProgram],
        universe: Sequence[Event],
        max_steps: int = 10**4,
        observe_threads: Sequence[str] | None = None,
    ):
        self.make_program = make_program
        self.universe = list(universe)
        self.max_steps = max_steps
        self.observe_threads = None if observe_threads is None else set(observe_threads)
        self._indexer: _SnapshotIndexer | None = None
        self._ex: Execution | None = None
        self._rng = random.Random()
        self._steps = 0
        self._enabled: set[Event] = set()
        self.done = True

    def _observed_slots(self) -> list[int]:
        assert self._ex is not None
        if self.observe_threads is None:
            return list(range(len(self._ex.threads)))
        return [
            i
            for i, t in enumerate(self._ex.threads)
            if t.name in self.observe_threads
        ]

    def _resolve_choices(self) -> None:
        assert self._ex is not None
        pending = self._ex.pending_choice()
        while pending is not None:
            idx, spec = pending
            self._ex.resolve_choice(idx, sample(spec, self._rng))
            pending = self._ex.pending_choice()

    def _refresh(self) -> None:
        assert self._ex is not None
        self._enabled = set(self._ex.enabled())
        self.done = not self._enabled or self._steps >= self.max_steps

    def observation(self) -> Observation:
        assert self._ex is not None and self._indexer is not None
        return Observation(
            tuple(
                self._indexer.index(i, snapshot_generator(self._ex.threads[i].gen))
                for i in self._observed_slots()
            )
        )

    def action_mask(self) -> tuple[bool, ...]:
        if self.done:
            return tuple(False for _ in self.universe)
        return tuple(e in self._enabled for e in self.universe)

    def reset(self, seed: int | None = None) -> Observation:
        self._rng = random.Random(seed)
        self._ex = Execution(self.make_program())
        if self._indexer is None:
            self._indexer = _SnapshotIndexer(len(self._ex.threads))
        self._steps = 0
        self._resolve_choices()
        self._refresh()
        return self.observation()

    def step(self, action: int) -> StepResult:
        if self._ex is None:
            raise IllegalAction("environment not reset")
        if self.done:
            raise IllegalAction("episode is over")
        if not 0 <= action < len(self.universe):
            raise IllegalAction(f"action index {action} out of range")
        event = self.universe[action]
        if event not in self._enabled:
            raise IllegalAction(f"event {event!r} is not enabled")
        reward = self._ex.step_reward()
        self._ex.advance(event)
        self._resolve_choices()
        self._steps += 1
        self._refresh()
        return StepResult(self.observation(), reward, self.done, self.action_mask())


def pancake_env(n: int = 2, b: int = 1, max_steps: int = 100) -> BProgramEnv:
    universe = [DRY, WET, THICK_UP, THICK_DOWN, BLUEBERRIES]
    return BProgramEnv(lambda: pancake(n, b), universe, max_steps)


# --------------------------------------------------------------------------
# Solver-based environment (two-player bit-flip)
# --------------------------------------------------------------------------

_SOLVE_MEMO: dict = {}


def _memo_solve(variables, query, config: SolverConfig):
    key = query
    if key not in _SOLVE_MEMO:
        if len(_SOLVE_MEMO) > 10**6:
            _SOLVE_MEMO.clear()
        _SOLVE_MEMO[key] = solve(variables, query, config)
    return _SOLVE_MEMO[key]


class BitflipEnv:
    """Controller's seat in the two-player bit-flip game.

    Actions 0..n-1 flip rows, n..n+m-1 flip columns; the mask admits rows
    on row turns and columns on column turns.  Between controller moves
    the random opponent plays automatically; rewards of the intermediate
    sync points are accumulated into the step reward.  The `action`
    variable of every solve is pinned through an extra constraint, so
    each query has one model and results can be memoized.
    """

    def __init__(
        self,
        n: int = 3,
        m: int = 3,
        rounds: int = 4,
        config: SolverConfig | None = None,
    ):
        self.n = n
        self.m = m
        self.rounds = rounds
        self.config = config if config is not None else SolverConfig(BUILTIN)
        self.sp: SolverProgram = bitflip_two_player(n, m)
        self._action_var: F.Variable = self.sp.meta["action_var"]
        self._board_vars = self.sp.meta["board_vars"]
        self._controller_slot = next(
            i for i, bt in enumerate(self.sp.program.threads) if bt.name == "controller"
        )
        self._observe_slots = [
            i for i, bt in enumerate(self.sp.program.threads) if bt.name != "reward_bt"
        ]
        self._indexer = _SnapshotIndexer(len(self.sp.program.threads))
        self._ex: SmtExecution | None = None
        self._rng = random.Random()
        self._pinned: int | None = None
        self._moves = 0
        self.done = True
        self.turn = "row"

    @property
    def n_actions(self) -> int:
        return self.n + self.m

    def _extra(self):
        if self._pinned is None:
            return None
        return self._action_var.eq(self._pinned)

    def _solve_and_advance(self) -> float:
        assert self._ex is not None
        result = _memo_solve(self._ex.variables, self._ex.query(), self.config)
        if result.status != "sat":
            raise RuntimeError(f"solver answered {result.status!r} mid-episode")
        reward = self._ex.step_reward()
        self._ex.advance(result.model)
        self._last_model = result.model
        return reward

    def _resolve_choices(self) -> None:
        assert self._ex is not None
        pending = self._ex.pending_choice()
        while pending is not None:
            idx, spec = pending
            self._ex.resolve_choice(idx, sample(spec, self._rng))
            pending = self._ex.pending_choice()

    def _controller_turn(self) -> bool:
        assert self._ex is not None
        st = self._ex.threads[self._controller_slot][2]
        return st is not None and st.request is not F.FALSE

    def _auto_play(self) -> float:
        """Advance opponent/init moves until the controller must act."""
        assert self._ex is not None
        total = 0.0
        self._resolve_choices()
        while not self.done and not self._controller_turn():
            # the opponent's own move: pin `action` to the line it picked
            # so the model is unique (the controller is not consulted)
            self._pinned = self._opponent_line()
            total += self._solve_and_advance()
            self._resolve_choices()
        return total

    def _opponent_line(self) -> int:
        """The line index of the opponent's pending request, if any."""
        assert self._ex is not None
        # the opponent keeps its sampled line in the generator local `i`
        # (rows) or `j` (columns)
        entry = next(e for e in self._ex.threads if e[0] == "opponent")
        frame = entry[1].gi_frame
        if frame is None:
            return 0
        locs = frame.f_locals
        if self.turn == "row" and "i" in locs and isinstance(locs["i"], int):
            return locs["i"]
        if "j" in locs and isinstance(locs["j"], int):
            return self.n + locs["j"]
        return 0

    def board(self):
        return board_from_assignment(self._board_vars, self._last_model)

    def observation(self) -> Observation:
        assert self._ex is not None
        return Observation(
            tuple(
                self._indexer.index(
                    i, snapshot_generator(self._ex.threads[i][1])
                )
                for i in self._observe_slots
            )
        )

    def action_mask(self) -> tuple[bool, ...]:
        if self.done:
            return tuple(False for _ in range(self.n_actions))
        if self.turn == "row":
            return tuple(i < self.n for i in range(self.n_actions))
        return tuple(i >= self.n for i in range(self.n_actions))

    def reset(self, seed: int | None = None) -> Observation:
        self._rng = random.Random(seed)
        self._ex = SmtExecution(
            self.sp.program, self.sp.variables, self.config, self._extra
        )
        self._moves = 0
        self._pinned = 0
        self.done = False
        self.turn = "row"
        self._last_model = None
        self._auto_play()
        return self.observation()

    def step(self, action: int) -> StepResult:
        if self._ex is None or self.done:
            raise IllegalAction("episode is over")
        mask = self.action_mask()
        if not 0 <= action < self.n_actions or not mask[action]:
            raise IllegalAction(f"action {action} is masked on a {self.turn} turn")
        self._pinned = action
        reward = self._solve_and_advance()
        self._moves += 1
        self.turn = "col" if self.turn == "row" else "row"
        if self._moves >= self.rounds * 2:
            self.done = True
        else:
            reward += self._auto_play()
        return StepResult(self.observation(), reward, self.done, self.action_mask())


def greedy_bitflip_action(env: BitflipEnv) -> int:
    """Flip the legal line with the most currently-off bits (ties: lowest)."""
    board = env.board()
    if env.turn == "row":
        zeros = [sum(1 for v in board[i] if not v) for i in range(env.n)]
        return max(range(env.n), key=lambda i: (zeros[i], -i))
    zeros = [sum(1 for row in board if not row[j]) for j in range(env.m)]
    return env.n + max(range(env.m), key=lambda j: (zeros[j], -j))


def random_masked_action(mask: Sequence[bool], rng: random.Random) -> int:
    legal = [i for i, ok in enumerate(mask) if ok]
    if not legal:
        raise IllegalAction("no legal action")
    return rng.choice(legal)


# --------------------------------------------------------------------------
# Tabular Q-learning
# --------------------------------------------------------------------------

Q_TABLE_CAP = 10**6


@dataclass
class TrainResult:
    policy: dict[Observation, int]
    q: dict[tuple[Observation, int], float]
    rows: list[tuple[int, float, float]]  # episode, cumulative_reward, epsilon

    def csv(self) -> str:
        lines = ["episode,cumulative_reward,epsilon"]
        for ep, rew, eps in self.rows:
            lines.append(f"{ep},{rew:.10g},{eps:.10g}")
        return "\n".join(lines) + "\n"


def _greedy_from_q(q, obs: Observation, mask: Sequence[bool]) -> int | None:
    legal = [i for i, ok in enumerate(mask) if ok]
    if not legal:
        return None
    return max(legal, key=lambda a: (q.get((obs, a), 0.0), -a))


def train_tabular_q(
    env,
    episodes: int,
    alpha: float = 0.1,
    gamma: float = 1.0,
    epsilon: float = 0.3,
    seed: int = 0,
    epsilon_final: float = 0.05,
    max_episode_steps: int = 10**4,
) -> TrainResult:
    """Q-learning with epsilon-greedy exploration over masked actions.

    Epsilon decays linearly from `epsilon` to `epsilon_final` across
    episodes.  Bit-reproducible for fixed seeds; the Q table is capped at
    10^6 entries (StateSpaceTooLarge beyond that).
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    q: dict[tuple[Observation, int], float] = {}
    rng = random.Random(derive_seed(seed, 0xE))
    rows: list[tuple[int, float, float]] = []

    for ep in range(episodes):
        frac = ep / (episodes - 1) if episodes > 1 else 1.0
        eps = epsilon + (epsilon_final - epsilon) * frac
        obs = env.reset(seed=derive_seed(seed, ep))
        total = 0.0
        for _ in range(max_episode_steps):
            mask = env.action_mask()
            legal = [i for i, ok in enumerate(mask) if ok]
            if not legal:
                break
            if rng.random() < eps:
                action = rng.choice(legal)
            else:
                action = _greedy_from_q(q, obs, mask)
            res = env.step(action)
            total += res.reward
            if res.done:
                best_next = 0.0
            else:
                nxt = _greedy_from_q(q, res.observation, res.action_mask)
                best_next = (
                    q.get((res.observation, nxt), 0.0) if nxt is not None else 0.0
                )
            key = (obs, action)
            q[key] = q.get(key, 0.0) + alpha * (
                res.reward + gamma * best_next - q.get(key, 0.0)
            )
            if len(q) > Q_TABLE_CAP:
                raise StateSpaceTooLarge(
                    f"Q table exceeded {Q_TABLE_CAP} entries"
                )
            obs = res.observation
            if res.done:
                break
        rows.append((ep, total, eps))

    policy: dict[Observation, int] = {}
    by_obs: dict[Observation, list[int]] = {}
    for (obs, action) in q:
        by_obs.setdefault(obs, []).append(action)
    for obs, actions in by_obs.items():
        policy[obs] = max(sorted(actions), key=lambda a: (q.get((obs, a), 0.0), -a))
    return TrainResult(policy, q, rows)


def rollout(
    env,
    choose: Callable[[Observation, Sequence[bool]], int],
    seed: int | None = None,
    max_steps: int = 10**4,
) -> tuple[float, int]:
    """One episode driven by `choose`; returns (total reward, steps)."""
    obs = env.reset(seed=seed)
    total = 0.0
    steps = 0
    for _ in range(max_steps):
        mask = env.action_mask()
        if not any(mask):
            break
        res = env.step(choose(obs, mask))
        total += res.reward
        steps += 1
        obs = res.observation
        if res.done:
            break
    return total, steps


def greedy_policy_chooser(result: TrainResult):
    """Roll out the learned greedy policy, falling back to Q-argmax."""

    def choose(obs: Observation, mask: Sequence[bool]) -> int:
        a = result.policy.get(obs)
        if a is not None and 0 <= a < len(mask) and mask[a]:
            return a
        a = _greedy_from_q(result.q, obs, mask)
        if a is None:
            raise IllegalAction("no legal action")
        return a

    return choose


def evaluate(
    env,
    choose: Callable[[Observation, Sequence[bool]], int],
    episodes: int,
    seed: int = 0,
) -> float:
    """Mean episode reward over `episodes` rollouts with derived seeds."""
    total = 0.0
    for i in range(episodes):
        r, _ = rollout(env, choose, seed=derive_seed(seed, i))
        total += r
    return total / episodes
