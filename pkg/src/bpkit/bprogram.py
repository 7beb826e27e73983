"""B-threads, b-programs, and the arbiter loop.

A b-thread body is a Python generator.  Each resume yields either a Sync
statement or a ChoiceSpec; the generator receives the selected event (or
the drawn choice outcome) on the next send.  The arbiter loop collects
statements, resolves pending choices, selects an unblocked requested
event, and resumes the threads that requested or waited for it.
"""

from __future__ import annotations

import enum
import random
import types
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from .choice import ChoiceSpec, sample
from .events import Event, EventSet, Explicit, AllEvents, Predicate, Union_, Complement
from .statements import Sync


class BThreadError(RuntimeError):
    """A b-thread body raised; carries the thread name."""

    def __init__(self, thread_name: str, cause: BaseException):
        super().__init__(f"b-thread {thread_name!r} failed: {cause!r}")
        self.thread_name = thread_name
        self.cause = cause


class EmptyEnabledSet(RuntimeError):
    pass


class SnapshotError(TypeError):
    """A b-thread local could not be frozen into a snapshot."""


class BThread:
    """A named, re-instantiable scenario module.

    `factory` returns a fresh generator each call.  Bodies must be
    deterministic: identical resume-value histories yield identical
    statement sequences.
    """

    def __init__(self, name: str, factory: Callable[[], Any]):
        self.name = name
        self.factory = factory

    def __repr__(self) -> str:
        return f"BThread({self.name!r})"


def thread(fn: Callable[..., Any]) -> Callable[..., BThread]:
    """Decorator turning a generator function into a BThread builder."""

    def build(*args, **kwargs) -> BThread:
        return BThread(fn.__name__, lambda: fn(*args, **kwargs))

    build.__name__ = fn.__name__
    return build


class BProgram:
    """An ordered collection of b-threads composed by the sync protocol."""

    def __init__(self, threads: Sequence[BThread], name: str = "bprogram"):
        names = [t.name for t in threads]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate b-thread names in {name!r}")
        self.threads = list(threads)
        self.name = name

    def __repr__(self) -> str:
        return f"BProgram({self.name!r}, {len(self.threads)} threads)"


class Terminal(enum.Enum):
    COMPLETED = "completed"
    DEADLOCK = "deadlock"
    STEP_LIMIT = "step_limit"


@dataclass
class Trace:
    """An executed event sequence with per-step rewards and a terminal class."""

    events: list
    rewards: list[float]
    terminal: Terminal
    choices: list[tuple[int, Any]] = field(default_factory=list)

    @property
    def total_reward(self) -> float:
        return sum(self.rewards)


# --------------------------------------------------------------------------
# Snapshots
# --------------------------------------------------------------------------

_SCALARS = (int, float, bool, str, bytes, type(None))


def freeze_value(v):
    """Map a b-thread local onto a hashable, structurally comparable value."""
    if isinstance(v, _SCALARS) or isinstance(v, Event):
        return v
    if isinstance(v, tuple):
        return tuple(freeze_value(x) for x in v)
    if isinstance(v, list):
        return ("list", tuple(freeze_value(x) for x in v))
    if isinstance(v, set) or isinstance(v, frozenset):
        return ("set", frozenset(freeze_value(x) for x in v))
    if isinstance(v, dict):
        return ("dict", tuple((freeze_value(k), freeze_value(x)) for k, x in v.items()))
    if isinstance(v, Explicit):
        return ("events", frozenset(v.events))
    if isinstance(v, AllEvents):
        return ("all-events",)
    if isinstance(v, Predicate):
        return ("event-pred", v.name, freeze_value(v.fn))
    if isinstance(v, Union_):
        return ("event-union", tuple(freeze_value(p) for p in v.parts))
    if isinstance(v, Complement):
        return ("event-compl", freeze_value(v.inner))
    if isinstance(v, Sync):
        return (
            "sync",
            tuple(v.request),
            freeze_value(v.wait_for),
            freeze_value(v.block),
            v.local_reward,
        )
    if isinstance(v, ChoiceSpec):
        return (
            "choice",
            tuple((freeze_value(k), p) for k, p in v.distribution.items()),
            v.repeat,
            v.replace,
            v.sorted,
        )
    if isinstance(v, types.FunctionType):
        cells = tuple(freeze_value(c.cell_contents) for c in (v.__closure__ or ()))
        return ("fn", v.__code__, cells)
    # structural fallback for objects that define their own equality/hash
    if type(v).__hash__ is not object.__hash__ and type(v).__hash__ is not None:
        return v
    raise SnapshotError(
        f"cannot freeze b-thread local of type {type(v).__name__}; "
        "use snapshot-friendly values or supply a custom snapshot"
    )


def snapshot_generator(gen) -> tuple:
    """Capture a generator's suspension point and frozen locals.

    Two generators with equal snapshots and deterministic bodies have
    identical future behavior, so snapshot equality is a sound state merge.
    """
    frame = gen.gi_frame
    if frame is None:
        return ("done", gen.gi_code)
    locs = tuple(
        (k, freeze_value(v)) for k, v in sorted(frame.f_locals.items(), key=lambda kv: kv[0])
    )
    return ("at", gen.gi_code, frame.f_lasti, locs)


# --------------------------------------------------------------------------
# Protocol primitives
# --------------------------------------------------------------------------


def enabled_events(statements: Iterable[Sync]) -> list[Event]:
    """Requested events blocked by no statement, in first-request order."""
    stmts = list(statements)
    seen: set[Event] = set()
    ordered: list[Event] = []
    for st in stmts:
        for e in st.request:
            if e not in seen:
                seen.add(e)
                ordered.append(e)
    return [e for e in ordered if not any(e in st.block for st in stmts)]


def wakeup(statement: Sync, event: Event) -> bool:
    """True iff the statement requested or waited for the event."""
    return event in statement.request or event in statement.wait_for


# --------------------------------------------------------------------------
# Selection policies
# --------------------------------------------------------------------------


class Policy:
    def select(self, enabled: Sequence[Event]) -> Event:
        raise NotImplementedError


class First(Policy):
    """Deterministic: first event in registration-then-request order."""

    def select(self, enabled: Sequence[Event]) -> Event:
        return enabled[0]


class Random(Policy):
    """Uniform random selection, reproducible under a fixed seed."""

    def __init__(self, seed: int | None = None):
        self.rng = random.Random(seed)

    def select(self, enabled: Sequence[Event]) -> Event:
        return self.rng.choice(list(enabled))


class Priority(Policy):
    """Selects the highest-ranked enabled event; ties fall back to order.

    `ranking` maps event names to numeric priority (higher wins); unranked
    events have priority 0.
    """

    def __init__(self, ranking: dict[str, float]):
        self.ranking = dict(ranking)

    def select(self, enabled: Sequence[Event]) -> Event:
        best = max(self.ranking.get(e.name, 0.0) for e in enabled)
        for e in enabled:
            if self.ranking.get(e.name, 0.0) == best:
                return e
        raise AssertionError("unreachable")


class Scripted(Policy):
    """Replays a fixed event sequence; used to reproduce counterexamples."""

    def __init__(self, events: Sequence[Event]):
        self.events = list(events)
        self.pos = 0

    def select(self, enabled: Sequence[Event]) -> Event:
        if self.pos >= len(self.events):
            raise EmptyEnabledSet("scripted policy exhausted")
        e = self.events[self.pos]
        if e not in enabled:
            raise ValueError(f"scripted event {e!r} is not enabled")
        self.pos += 1
        return e


def select_event(enabled: Sequence[Event], policy: Policy) -> Event:
    if not enabled:
        raise EmptyEnabledSet("no enabled events to select from")
    return policy.select(enabled)


# --------------------------------------------------------------------------
# Execution
# --------------------------------------------------------------------------


class _LiveThread:
    __slots__ = ("name", "gen", "statement", "done")

    def __init__(self, bt: BThread):
        self.name = bt.name
        self.gen = bt.factory()
        self.statement = None
        self.done = False

    def resume(self, value) -> None:
        try:
            self.statement = self.gen.send(value)
        except StopIteration:
            self.statement = None
            self.done = True
        except BaseException as exc:
            raise BThreadError(self.name, exc) from exc


class Execution:
    """One live instantiation of a b-program, stepped sync point by sync point."""

    def __init__(self, bp: BProgram):
        self.bp = bp
        self.threads = [_LiveThread(bt) for bt in bp.threads]
        for t in self.threads:
            t.resume(None)

    def pending_choice(self) -> tuple[int, ChoiceSpec] | None:
        """First thread (registration order) currently holding a choice."""
        for i, t in enumerate(self.threads):
            if isinstance(t.statement, ChoiceSpec):
                return i, t.statement
        return None

    def resolve_choice(self, idx: int, outcome) -> None:
        self.threads[idx].resume(outcome)

    def statements(self) -> list[Sync]:
        out = []
        for t in self.threads:
            if t.statement is not None:
                if not isinstance(t.statement, Sync):
                    raise BThreadError(
                        t.name, TypeError(f"unexpected yield {t.statement!r}")
                    )
                out.append(t.statement)
        return out

    def enabled(self) -> list[Event]:
        return enabled_events(self.statements())

    def has_requests(self) -> bool:
        return any(st.request for st in self.statements())

    def step_reward(self) -> float:
        return sum(st.local_reward for st in self.statements())

    def advance(self, event: Event) -> None:
        for t in self.threads:
            if t.statement is not None and wakeup(t.statement, event):
                t.resume(event)


def run(
    bp: BProgram,
    policy: Policy | None = None,
    max_steps: int = 10**6,
    seed: int | None = None,
) -> Trace:
    """Execute the sync loop until completion, deadlock, or the step limit.

    `seed` drives choice resolution; the policy carries its own randomness
    if any.  The per-step reward is the sum of local rewards over all
    active statements at the moment an event is selected.
    """
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    policy = policy or First()
    rng = random.Random(seed)
    ex = Execution(bp)
    events: list[Event] = []
    rewards: list[float] = []
    choices: list[tuple[int, Any]] = []

    for _ in range(max_steps):
        pending = ex.pending_choice()
        while pending is not None:
            idx, spec = pending
            outcome = sample(spec, rng)
            choices.append((idx, outcome))
            ex.resolve_choice(idx, outcome)
            pending = ex.pending_choice()
        enabled = ex.enabled()
        if not enabled:
            terminal = Terminal.DEADLOCK if ex.has_requests() else Terminal.COMPLETED
            return Trace(events, rewards, terminal, choices)
        event = select_event(enabled, policy)
        rewards.append(ex.step_reward())
        events.append(event)
        ex.advance(event)
    return Trace(events, rewards, Terminal.STEP_LIMIT, choices)


def run_scripted(
    bp: BProgram,
    events: Sequence[Event],
    choice_outcomes: Sequence[Any] = (),
) -> Trace:
    """Replay a fixed event sequence (and choice outcomes) through the loop."""
    outcomes = list(choice_outcomes)
    ex = Execution(bp)
    got_events: list[Event] = []
    rewards: list[float] = []
    for target in events:
        pending = ex.pending_choice()
        while pending is not None:
            idx, _ = pending
            if not outcomes:
                raise ValueError("replay ran out of choice outcomes")
            ex.resolve_choice(idx, outcomes.pop(0))
            pending = ex.pending_choice()
        enabled = ex.enabled()
        if target not in enabled:
            raise ValueError(f"replay event {target!r} not enabled (enabled={enabled})")
        rewards.append(ex.step_reward())
        got_events.append(target)
        ex.advance(target)
    return Trace(got_events, rewards, Terminal.STEP_LIMIT)


def enumerate_traces(bp: BProgram, max_steps: int = 10**4) -> list[Trace]:
    """All maximal traces under exhaustive arbiter and choice branching.

    Brute-force oracle: re-executes the program along every decision
    prefix, so it is only suitable for small instances.
    """
    results: list[Trace] = []

    def replay(decisions: list[tuple[str, Any]]):
        """Execute along a decision prefix; returns (execution, trace parts)."""
        ex = Execution(bp)
        events: list[Event] = []
        rewards: list[float] = []
        choices: list[tuple[int, Any]] = []
        i = 0
        while True:
            pending = ex.pending_choice()
            if pending is not None:
                idx, spec = pending
                if i >= len(decisions):
                    from .choice import expand_outcomes

                    opts = [("choice", o) for o, _ in expand_outcomes(spec)]
                    return ex, events, rewards, choices, opts
                kind, val = decisions[i]
                assert kind == "choice"
                choices.append((idx, val))
                ex.resolve_choice(idx, val)
                i += 1
                continue
            enabled = ex.enabled()
            if not enabled:
                terminal = (
                    Terminal.DEADLOCK if ex.has_requests() else Terminal.COMPLETED
                )
                results.append(Trace(events, rewards, terminal, choices))
                return None
            if len(events) >= max_steps:
                results.append(Trace(events, rewards, Terminal.STEP_LIMIT, choices))
                return None
            if i >= len(decisions):
                return ex, events, rewards, choices, [("event", e) for e in enabled]
            kind, val = decisions[i]
            assert kind == "event"
            rewards.append(ex.step_reward())
            events.append(val)
            ex.advance(val)
            i += 1

    stack: list[list[tuple[str, Any]]] = [[]]
    while stack:
        prefix = stack.pop()
        out = replay(prefix)
        if out is None:
            continue
        _, _, _, _, options = out
        for opt in reversed(options):
            stack.append(prefix + [opt])
    return results
