"""State-space exploration: per-b-thread graphs and their product.

Generators cannot be cloned, so each b-thread is explored by replay:
a state is identified by a snapshot of the generator's frame, and is
reached again by re-executing the body along the recorded resume-value
history.  The product composes per-thread graphs into a labeled
transition system (with probabilistic splits for choices) that drives
translation, safety checking, and exact reachability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .bprogram import (
    BProgram,
    BThread,
    BThreadError,
    snapshot_generator,
    wakeup,
)
from .choice import ChoiceSpec, expand_outcomes
from .events import Event
from .statements import Sync

START = "START"
RUNNING = "RUNNING"
DONE = "DONE"

DEFAULT_THREAD_STATE_CAP = 10**5
DEFAULT_PRODUCT_NODE_CAP = 10**7


class NonDeterministicBThread(RuntimeError):
    """Replaying the same history produced a different state."""


class StateExplosion(RuntimeError):
    pass


def sort_events(events: Iterable[Event]) -> tuple[Event, ...]:
    return tuple(sorted(set(events)))


# --------------------------------------------------------------------------
# Per-b-thread graphs
# --------------------------------------------------------------------------


@dataclass
class ThreadState:
    """One explored sync or choice point of a single b-thread."""

    index: int
    kind: str  # 'sync' | 'choice'
    requested: tuple = ()
    blocked: frozenset = frozenset()
    sync_edges: dict = field(default_factory=dict)  # Event -> state index
    choice_edges: tuple = ()  # ((prob, target index, outcome), ...)

    @property
    def final(self) -> bool:
        return (
            self.kind == "sync"
            and not self.requested
            and not self.blocked
            and not self.sync_edges
        )


@dataclass
class BThreadGraph:
    """A b-thread's reachable states over a fixed event universe."""

    name: str
    states: list[ThreadState]
    universe: tuple[Event, ...]

    def requested_events(self) -> set[Event]:
        out: set[Event] = set()
        for s in self.states:
            out.update(s.requested)
        return out


def _resume(gen, value, name: str):
    try:
        return gen.send(value)
    except StopIteration:
        return None
    except BaseException as exc:
        raise BThreadError(name, exc) from exc


def explore_bthread(
    bt: BThread,
    universe: Iterable[Event],
    max_states: int = DEFAULT_THREAD_STATE_CAP,
) -> BThreadGraph:
    """DFS over the b-thread's sync/choice states, merging equal snapshots."""
    universe = sort_events(universe)

    states: list[ThreadState | None] = []
    histories: list[tuple] = []
    snap_to_idx: dict = {}
    pending: list[int] = []

    def spawn(history: Sequence):
        gen = bt.factory()
        stmt = _resume(gen, None, bt.name)
        for v in history:
            stmt = _resume(gen, v, bt.name)
        return gen, stmt

    def register(gen, history: tuple) -> int:
        snap = snapshot_generator(gen)
        if snap in snap_to_idx:
            return snap_to_idx[snap]
        idx = len(states)
        if idx >= max_states:
            raise StateExplosion(
                f"b-thread {bt.name!r} exceeds {max_states} explored states"
            )
        states.append(None)
        histories.append(history)
        snap_to_idx[snap] = idx
        pending.append(idx)
        return idx

    gen0, _ = spawn(())
    register(gen0, ())

    while pending:
        idx = pending.pop()
        history = histories[idx]
        gen, stmt = spawn(history)
        snap = snapshot_generator(gen)
        if snap_to_idx.get(snap) != idx:
            raise NonDeterministicBThread(
                f"b-thread {bt.name!r} diverged when replaying its history; "
                "bodies must be deterministic functions of their resume values"
            )
        if stmt is None:
            states[idx] = ThreadState(idx, "sync")
        elif isinstance(stmt, Sync):
            blocked = frozenset(e for e in universe if e in stmt.block)
            edges: dict = {}
            for e in universe:
                if wakeup(stmt, e):
                    g2, _ = spawn(history)
                    _resume(g2, e, bt.name)
                    edges[e] = register(g2, history + (e,))
            states[idx] = ThreadState(idx, "sync", tuple(stmt.request), blocked, edges)
        elif isinstance(stmt, ChoiceSpec):
            splits = []
            for outcome, p in expand_outcomes(stmt):
                g2, _ = spawn(history)
                _resume(g2, outcome, bt.name)
                splits.append((p, register(g2, history + (outcome,)), outcome))
            states[idx] = ThreadState(idx, "choice", choice_edges=tuple(splits))
        else:
            raise BThreadError(
                bt.name,
                TypeError(
                    f"cannot explore yielded value {stmt!r}; only discrete "
                    "sync and choice statements have finite state graphs"
                ),
            )

    return BThreadGraph(bt.name, states, universe)  # type: ignore[arg-type]


def explore_program(
    bp: BProgram,
    declared_extra: Iterable[Event] = (),
    max_states: int = DEFAULT_THREAD_STATE_CAP,
) -> tuple[list[BThreadGraph], tuple[Event, ...]]:
    """Explore every b-thread over the fixed-point event universe."""
    universe: set[Event] = set(declared_extra)
    while True:
        graphs = [explore_bthread(bt, universe, max_states) for bt in bp.threads]
        requested: set[Event] = set(declared_extra)
        for g in graphs:
            requested |= g.requested_events()
        if requested == universe:
            return graphs, sort_events(universe)
        universe = requested


def event_universe(
    bp: BProgram, declared_extra: Iterable[Event] = ()
) -> tuple[Event, ...]:
    """Fixed-point union of all requestable events, plus declared extras."""
    return explore_program(bp, declared_extra)[1]


# --------------------------------------------------------------------------
# Product graph
# --------------------------------------------------------------------------


@dataclass
class ProductNode:
    index: int
    phase: str  # START | RUNNING | DONE
    states: tuple  # per-thread state indices; () for the DONE sink
    kind: str  # 'sync' | 'choice' | 'done'
    enabled: tuple = ()  # events, in first-request order (sync nodes)
    requested: tuple = ()
    event_edges: dict = field(default_factory=dict)  # Event -> node index
    prob_edges: tuple = ()  # ((prob, node index, (thread, outcome)), ...)
    terminal: str | None = None  # 'completed' | 'deadlock' on the edge to DONE


@dataclass
class ProductGraph:
    nodes: list[ProductNode]
    universe: tuple[Event, ...]
    thread_names: tuple[str, ...]
    done_index: int
    start_index: int = 0

    @property
    def sync_node_count(self) -> int:
        return sum(1 for n in self.nodes if n.kind == "sync")

    def successors(self, idx: int) -> list[int]:
        n = self.nodes[idx]
        out = list(n.event_edges.values())
        out.extend(t for _, t, _ in n.prob_edges)
        if n.terminal is not None:
            out.append(self.done_index)
        return out


def build_product(
    graphs: Sequence[BThreadGraph],
    universe: Iterable[Event],
    max_nodes: int = DEFAULT_PRODUCT_NODE_CAP,
) -> ProductGraph:
    """Compose per-thread graphs into the program's transition system.

    Nodes pair per-thread state indices with a phase marking whether the
    first event has been selected.  Choice states expand (registration
    order, one at a time) before any event selection; a node with no
    enabled event transitions to the DONE sink.
    """
    universe = sort_events(universe)
    nodes: list[ProductNode] = []
    key_to_idx: dict = {}
    pending: list[int] = []

    def register(phase: str, states: tuple) -> int:
        key = (phase, states)
        if key in key_to_idx:
            return key_to_idx[key]
        idx = len(nodes)
        if idx >= max_nodes:
            raise StateExplosion(f"product exceeds {max_nodes} nodes")
        nodes.append(ProductNode(idx, phase, states, kind=""))
        key_to_idx[key] = idx
        pending.append(idx)
        return idx

    done_idx = register(DONE, ())
    nodes[done_idx].kind = "done"
    pending.clear()

    start_idx = register(START, tuple(0 for _ in graphs))

    while pending:
        idx = pending.pop()
        node = nodes[idx]
        thread_states = [g.states[s] for g, s in zip(graphs, node.states)]

        choice_at = next(
            (i for i, ts in enumerate(thread_states) if ts.kind == "choice"), None
        )
        if choice_at is not None:
            ts = thread_states[choice_at]
            splits = []
            for p, target, outcome in ts.choice_edges:
                succ = list(node.states)
                succ[choice_at] = target
                splits.append((p, register(node.phase, tuple(succ)), (choice_at, outcome)))
            node.kind = "choice"
            node.prob_edges = tuple(splits)
            continue

        node.kind = "sync"
        requested: list[Event] = []
        seen: set[Event] = set()
        blocked: set[Event] = set()
        for ts in thread_states:
            blocked |= ts.blocked
            for e in ts.requested:
                if e not in seen:
                    seen.add(e)
                    requested.append(e)
        enabled = [e for e in requested if e not in blocked]
        node.requested = tuple(requested)
        node.enabled = tuple(enabled)
        if not enabled:
            node.terminal = "deadlock" if requested else "completed"
            continue
        edges: dict = {}
        for e in enabled:
            succ = tuple(
                g.states[s].sync_edges.get(e, s) for g, s in zip(graphs, node.states)
            )
            edges[e] = register(RUNNING, succ)
        node.event_edges = edges

    return ProductGraph(nodes, universe, tuple(g.name for g in graphs), done_idx, start_idx)


def explore_and_build(
    bp: BProgram,
    declared_extra: Iterable[Event] = (),
    max_states: int = DEFAULT_THREAD_STATE_CAP,
    max_nodes: int = DEFAULT_PRODUCT_NODE_CAP,
) -> tuple[list[BThreadGraph], ProductGraph]:
    graphs, universe = explore_program(bp, declared_extra, max_states)
    return graphs, build_product(graphs, universe, max_nodes)


# --------------------------------------------------------------------------
# Deterministic dumps
# --------------------------------------------------------------------------


def event_label(e: Event) -> str:
    if e.payload:
        inner = ",".join(f"{k}={v}" for k, v in e.payload)
        return f"{e.name}({inner})"
    return e.name


def dump_graph(g: BThreadGraph) -> str:
    data = {
        "name": g.name,
        "universe": [event_label(e) for e in g.universe],
        "states": [
            {
                "index": s.index,
                "kind": s.kind,
                "requested": [event_label(e) for e in s.requested],
                "blocked": sorted(event_label(e) for e in s.blocked),
                "syncEdges": {
                    event_label(e): t for e, t in sorted(s.sync_edges.items())
                },
                "choiceEdges": [
                    {"prob": p, "target": t, "outcome": repr(o)}
                    for p, t, o in s.choice_edges
                ],
            }
            for s in g.states
        ],
    }
    return json.dumps(data, indent=2, sort_keys=True)


def dump_product(pg: ProductGraph) -> str:
    data = {
        "threads": list(pg.thread_names),
        "universe": [event_label(e) for e in pg.universe],
        "start": pg.start_index,
        "done": pg.done_index,
        "nodes": [
            {
                "index": n.index,
                "phase": n.phase,
                "states": list(n.states),
                "kind": n.kind,
                "enabled": [event_label(e) for e in n.enabled],
                "eventEdges": {
                    event_label(e): t for e, t in sorted(n.event_edges.items())
                },
                "probEdges": [
                    {"prob": p, "target": t, "choice": repr(c)}
                    for p, t, c in n.prob_edges
                ],
                "terminal": n.terminal,
            }
            for n in pg.nodes
        ],
    }
    return json.dumps(data, indent=2, sort_keys=True)
