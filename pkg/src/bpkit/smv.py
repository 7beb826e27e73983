"""Compilation of explored b-thread graphs to an SMV model.

Each b-thread becomes a module with a `state` variable over its explored
state indices, booleans `<E>_requested`/`<E>_blocked` assigned by case
over `state`, and a `next(state)` case keyed on `next(event)`.  The main
module enumerates the event variable over {BPROGRAM_START, BPROGRAM_DONE}
plus the universe, instantiates all thread modules, defines per-event
requested/blocked/enabled, and constrains transitions so that exactly
the enabled events can be selected, falling into the BPROGRAM_DONE sink
when none is.

Conventions (the output is deterministic and golden-testable):
- `state` ranges over 0 .. K-1 for K explored states;
- `next(state)` uses one explicit arm per (event, state) edge rather
  than arithmetic on `state`;
- events are listed in sorted order everywhere.
"""

from __future__ import annotations

from typing import Sequence

from .events import Event
from .explore import BThreadGraph, sort_events
from .naming import event_identifiers, thread_identifiers

START_NAME = "BPROGRAM_START"
DONE_NAME = "BPROGRAM_DONE"


class ProbabilisticUnsupported(ValueError):
    """SMV output is non-probabilistic; choice states cannot be compiled."""


def _case(lines: list[str], indent: str = "        ") -> list[str]:
    out = ["      case"]
    out.extend(indent + ln for ln in lines)
    out.append("      esac;")
    return out


def _state_disjunction(indices: Sequence[int]) -> str:
    return " | ".join(f"state = {i}" for i in indices)


def translate_bthread(g: BThreadGraph, name: str, event_ids: dict[Event, str]) -> str:
    """Emit one `MODULE <name>(event)` for an explored b-thread graph."""
    for s in g.states:
        if s.kind == "choice":
            raise ProbabilisticUnsupported(
                f"b-thread {g.name!r} has a probabilistic choice at state "
                f"{s.index}; SMV output supports discrete sync only"
            )
    k = len(g.states)
    requested_events = sort_events(e for s in g.states for e in s.requested)
    blocked_events = sort_events(e for s in g.states for e in s.blocked)

    lines = [f"MODULE {name}(event)"]
    lines.append("  VAR")
    lines.append(f"    state: 0 .. {k - 1};")
    for e in requested_events:
        lines.append(f"    {event_ids[e]}_requested: boolean;")
    for e in blocked_events:
        lines.append(f"    {event_ids[e]}_blocked: boolean;")
    lines.append("  INIT")
    lines.append("    state = 0")
    lines.append("  ASSIGN")

    def boolean_assign(var: str, true_states: list[int]):
        false_states = [s.index for s in g.states if s.index not in set(true_states)]
        arms = []
        if true_states:
            arms.append(f"{_state_disjunction(sorted(true_states, reverse=True))} : TRUE;")
        if false_states:
            arms.append(f"{_state_disjunction(sorted(false_states, reverse=True))} : FALSE;")
        arms.append("TRUE : FALSE;")
        lines.append(f"    {var} :=")
        lines.extend(_case(arms))

    for e in requested_events:
        boolean_assign(
            f"{event_ids[e]}_requested",
            [s.index for s in g.states if e in s.requested],
        )
    for e in blocked_events:
        boolean_assign(
            f"{event_ids[e]}_blocked",
            [s.index for s in g.states if e in s.blocked],
        )

    arms = []
    for e in g.universe:
        for s in g.states:
            target = s.sync_edges.get(e)
            if target is not None and target != s.index:
                arms.append(
                    f"next(event) = {event_ids[e]} & state = {s.index} : {target};"
                )
    arms.append("TRUE : state;")
    lines.append("    next(state) :=")
    lines.extend(_case(arms))
    return "\n".join(lines) + "\n"


def translate_main(
    graphs: Sequence[BThreadGraph],
    universe: Sequence[Event],
    event_ids: dict[Event, str],
    module_names: Sequence[str],
) -> str:
    """Emit the arbiter main module wiring all thread modules together."""
    universe = sort_events(universe)
    lines = ["MODULE main"]
    lines.append("  VAR")
    enum = ", ".join([START_NAME, DONE_NAME] + [event_ids[e] for e in universe])
    lines.append(f"    event: {{{enum}}};")
    for i, mod in enumerate(module_names):
        lines.append(f"    bt{i}: {mod}(event);")
    lines.append("  INIT")
    lines.append(f"    event = {START_NAME}")
    lines.append("  DEFINE")

    def contributors(e: Event, field: str) -> list[str]:
        out = []
        for i, g in enumerate(graphs):
            states = (
                {e2 for s in g.states for e2 in s.requested}
                if field == "requested"
                else {e2 for s in g.states for e2 in s.blocked}
            )
            if e in states:
                out.append(f"bt{i}.{event_ids[e]}_{field}")
        return out

    for e in universe:
        eid = event_ids[e]
        req = contributors(e, "requested")
        blk = contributors(e, "blocked")
        lines.append(f"    {eid}_requested := {' | '.join(req) if req else 'FALSE'};")
        lines.append(f"    {eid}_blocked := {' | '.join(blk) if blk else 'FALSE'};")
        lines.append(f"    {eid}_enabled := {eid}_requested & !{eid}_blocked;")
    lines.append("  TRANS")
    clauses = [f"next(event) != {START_NAME}"]
    for e in universe:
        eid = event_ids[e]
        clauses.append(f"(!{eid}_enabled -> next(event) != {eid})")
    if universe:
        any_enabled = " | ".join(f"{event_ids[e]}_enabled" for e in universe)
        clauses.append(f"({any_enabled} -> next(event) != {DONE_NAME})")
    clauses.append(f"(event = {DONE_NAME} -> next(event) = {DONE_NAME})")
    lines.append("    " + " & ".join(clauses))
    return "\n".join(lines) + "\n"


def translate_program(
    graphs: Sequence[BThreadGraph],
    universe: Sequence[Event],
    properties: Sequence[str] = (),
) -> str:
    """Emit a complete SMV model: one module per b-thread, then main."""
    universe = sort_events(universe)
    event_ids = event_identifiers(universe)
    for ident in (START_NAME, DONE_NAME):
        if ident in event_ids.values():
            raise ValueError(f"event identifier {ident!r} is reserved")
    thread_ids = thread_identifiers([g.name for g in graphs])
    if "main" in thread_ids.values():
        raise ValueError("b-thread name 'main' collides with the SMV main module")
    parts = [translate_bthread(g, thread_ids[g.name], event_ids) for g in graphs]
    parts.append(
        translate_main(graphs, universe, event_ids, [thread_ids[g.name] for g in graphs])
    )
    text = "\n".join(parts)
    for prop in properties:
        text += "\n" + prop.rstrip("\n") + "\n"
    return text
