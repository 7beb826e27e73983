"""Verdict engines over the product graph and by direct sampling.

- check_safety: BFS for a shortest path firing a bad event (or hitting a
  bad node / bad consecutive-event pair).
- reach_probability: value iteration for max/min probability that a
  target-labeled edge ever fires, treating event alternatives as
  nondeterminism and choice splits as probability.
- sample_estimate: repeated execution with derived per-run seeds,
  reporting the hit fraction and its standard error.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

from .bprogram import BProgram, Policy, Trace, Terminal, run
from .events import Event, EventSet, as_event_set
from .explore import ProductGraph, ProductNode


class NoConvergence(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(
            f"value iteration did not converge after {iterations} iterations "
            f"(residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


@dataclass
class Verdict:
    holds: bool
    counterexample: Trace | None = None


@dataclass
class ProbResult:
    value: float
    mode: str  # 'max' | 'min'
    iterations: int
    residual: float


# --------------------------------------------------------------------------
# Explicit safety checking
# --------------------------------------------------------------------------


def check_safety(
    pg: ProductGraph,
    bad: EventSet | Event | Sequence[Event] | None = None,
    bad_node: Callable[[ProductNode], bool] | None = None,
    bad_pair: Callable[[Event, Event], bool] | None = None,
) -> Verdict:
    """BFS from START; returns the shortest counterexample if any.

    `bad` flags any edge firing a member event; `bad_node` flags reachable
    nodes; `bad_pair(previous, current)` flags consecutive event pairs.
    """
    if bad is None and bad_node is None and bad_pair is None:
        raise ValueError("no bad condition given")
    bad_set = as_event_set(bad) if bad is not None else None

    # BFS state carries the last fired event only when pair checking needs it
    start = (pg.start_index, None)
    seen = {start}
    # each queue entry: (state, events so far, choice outcomes so far)
    queue: list[tuple[tuple, tuple, tuple]] = [(start, (), ())]

    if bad_node is not None and bad_node(pg.nodes[pg.start_index]):
        return Verdict(False, Trace([], [], Terminal.STEP_LIMIT, []))

    while queue:
        (idx, last), events, choices = queue.pop(0)
        node = pg.nodes[idx]
        for p, target, choice_info in node.prob_edges:
            if p <= 0:
                continue
            state = (target, last)
            if state in seen:
                continue
            seen.add(state)
            new_choices = choices + (choice_info,)
            if bad_node is not None and bad_node(pg.nodes[target]):
                return Verdict(
                    False, Trace(list(events), [], Terminal.STEP_LIMIT, list(new_choices))
                )
            queue.append((state, events, new_choices))
        for e, target in node.event_edges.items():
            new_events = events + (e,)
            if bad_set is not None and e in bad_set:
                return Verdict(
                    False, Trace(list(new_events), [], Terminal.STEP_LIMIT, list(choices))
                )
            if bad_pair is not None and last is not None and bad_pair(last, e):
                return Verdict(
                    False, Trace(list(new_events), [], Terminal.STEP_LIMIT, list(choices))
                )
            state = (target, e if bad_pair is not None else None)
            if state in seen:
                continue
            seen.add(state)
            if bad_node is not None and bad_node(pg.nodes[target]):
                return Verdict(
                    False, Trace(list(new_events), [], Terminal.STEP_LIMIT, list(choices))
                )
            queue.append((state, new_events, choices))
    return Verdict(True)


# --------------------------------------------------------------------------
# Exact reachability by value iteration
# --------------------------------------------------------------------------


def _min_zero_states(pg: ProductGraph, target: EventSet) -> set[int]:
    """Nodes where some scheduler keeps the target probability at 0.

    Greatest fixed point: assume every node can avoid the target, then
    repeatedly discard nodes that cannot (a choice node needs all its
    probabilistic successors avoidable; a sync node needs one enabled
    non-target edge into an avoidable node, or no enabled event at all).
    """
    avoid = set(range(len(pg.nodes)))
    changed = True
    while changed:
        changed = False
        for node in pg.nodes:
            if node.index not in avoid:
                continue
            if node.kind == "done" or node.terminal is not None:
                continue
            if node.prob_edges:
                ok = all(t in avoid for p, t, _ in node.prob_edges if p > 0)
            else:
                ok = any(
                    e not in target and t in avoid
                    for e, t in node.event_edges.items()
                )
            if not ok:
                avoid.discard(node.index)
                changed = True
    return avoid


def reach_probability(
    pg: ProductGraph,
    target: EventSet | Event | Sequence[Event],
    mode: str = "max",
    tol: float = 1e-9,
    max_iter: int = 10**6,
) -> ProbResult:
    """Probability that an edge labeled with a target event ever fires."""
    mode = mode.lower()
    if mode not in ("max", "min"):
        raise ValueError(f"mode must be 'max' or 'min', got {mode!r}")
    target = as_event_set(target)

    zero: set[int] = _min_zero_states(pg, target) if mode == "min" else set()

    values = [0.0] * len(pg.nodes)
    combine = max if mode == "max" else min
    residual = math.inf
    for iteration in range(1, max_iter + 1):
        residual = 0.0
        for node in pg.nodes:
            idx = node.index
            if idx in zero:
                continue
            if node.kind == "done" or node.terminal is not None:
                continue
            if node.prob_edges:
                v = sum(p * values[t] for p, t, _ in node.prob_edges)
            elif node.event_edges:
                v = combine(
                    1.0 if e in target else values[t]
                    for e, t in node.event_edges.items()
                )
            else:
                continue
            delta = abs(v - values[idx])
            if delta > residual:
                residual = delta
            values[idx] = v
        if residual < tol:
            return ProbResult(values[pg.start_index], mode, iteration, residual)
    raise NoConvergence(max_iter, residual)


# --------------------------------------------------------------------------
# Sampling estimation
# --------------------------------------------------------------------------


def derive_seed(seed: int, index: int) -> int:
    digest = hashlib.blake2b(
        f"{seed}:{index}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


@dataclass
class SampleReport:
    mean: float
    standard_error: float
    elapsed_per_run: float
    rows: list[tuple[int, int, float, float]]  # run_index, hit, cum_mean, cum_SE


def sample_estimate(
    make_program: Callable[[], BProgram],
    target: EventSet | Event | Sequence[Event],
    n_runs: int,
    seed: int = 0,
    policy_factory: Callable[[int], Policy] | None = None,
    max_steps: int = 10**5,
) -> SampleReport:
    """Run the program n_runs times and estimate the target-hit fraction.

    Run i uses the derived seed hash(seed, i) for both choice resolution
    and the policy built by policy_factory(derived_seed).
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    target = as_event_set(target)
    hits = 0
    rows: list[tuple[int, int, float, float]] = []
    t0 = time.perf_counter()
    for i in range(n_runs):
        run_seed = derive_seed(seed, i)
        policy = policy_factory(run_seed) if policy_factory is not None else None
        try:
            trace = run(
                make_program(), policy=policy, max_steps=max_steps,
                seed=run_seed,
            )
        except Exception as exc:
            raise RuntimeError(f"sampling run {i} failed") from exc
        hit = int(any(e in target for e in trace.events))
        hits += hit
        mean = hits / (i + 1)
        se = math.sqrt(mean * (1.0 - mean) / (i + 1))
        rows.append((i, hit, mean, se))
    elapsed = (time.perf_counter() - t0) / n_runs
    mean = hits / n_runs
    se = math.sqrt(mean * (1.0 - mean) / n_runs)
    return SampleReport(mean, se, elapsed, rows)


def sample_csv(report: SampleReport) -> str:
    lines = ["run_index,hit,cumulative_mean,cumulative_SE"]
    for idx, hit, mean, se in report.rows:
        lines.append(f"{idx},{hit},{mean:.10g},{se:.10g}")
    return "\n".join(lines) + "\n"
