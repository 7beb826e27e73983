"""Compilation of explored b-thread graphs to a PRISM `mdp` model.

Each b-thread becomes a module with a state counter `s_<name>`, labeled
commands synchronizing on events (with explicit self-loops when the
thread ignores an event), and unlabeled probabilistic splits for choice
states.  The main module defines per-event requested/blocked/enabled
formulas and offers one labeled command per enabled event, recording the
selected event's index in the `event` variable (-1 before the first
selection).

Output is deterministic; event indices follow sorted universe order and
are listed in a comment header.
"""

from __future__ import annotations

from typing import Sequence

from .events import Event
from .explore import BThreadGraph, sort_events
from .naming import event_identifiers, thread_identifiers


def render_probability(p: float) -> str:
    if p == 1:
        return "1"
    return f"{p:.17g}"


def translate_bthread_prism(
    g: BThreadGraph, name: str, universe: Sequence[Event], event_ids: dict[Event, str]
) -> str:
    """Emit the formulas and module for one explored b-thread graph."""
    universe = sort_events(universe)
    var = f"s_{name}"
    lines = []
    for e in universe:
        req_states = [s.index for s in g.states if e in s.requested]
        body = " | ".join(f"({var}={i})" for i in req_states) if req_states else "false"
        lines.append(f"formula {name}_req_{event_ids[e]} = {body};")
    for e in universe:
        blk_states = [s.index for s in g.states if e in s.blocked]
        body = " | ".join(f"({var}={i})" for i in blk_states) if blk_states else "false"
        lines.append(f"formula {name}_block_{event_ids[e]} = {body};")
    lines.append(f"module {name}")
    lines.append(f"\t{var}: [0..{len(g.states) - 1}] init 0;")
    lines.append("")
    for s in g.states:
        if s.kind == "choice":
            terms = " + ".join(
                f"{render_probability(p)}: ({var}'={t})" for p, t, _ in s.choice_edges
            )
            lines.append(f"\t[] ({var}={s.index}) -> {terms};")
        else:
            for e in universe:
                target = s.sync_edges.get(e, s.index)
                lines.append(
                    f"\t[{event_ids[e]}] ({var}={s.index}) -> 1: ({var}'={target});"
                )
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


def translate_main_prism(
    graphs: Sequence[BThreadGraph],
    universe: Sequence[Event],
    event_ids: dict[Event, str],
    thread_ids: dict[str, str],
) -> str:
    """Emit the arbiter main module collecting enabled events."""
    universe = sort_events(universe)
    lines = []

    def contributors(e: Event, field: str) -> list[str]:
        out = []
        for g in graphs:
            states = (
                {e2 for s in g.states for e2 in s.requested}
                if field == "req"
                else {e2 for s in g.states for e2 in s.blocked}
            )
            if e in states:
                out.append(f"({thread_ids[g.name]}_{field}_{event_ids[e]}=true)")
        return out

    for e in universe:
        eid = event_ids[e]
        req = contributors(e, "req")
        lines.append(f"formula {eid}_req = {' | '.join(req) if req else 'false'};")
    for e in universe:
        eid = event_ids[e]
        blk = contributors(e, "block")
        lines.append(f"formula {eid}_block = {' | '.join(blk) if blk else 'false'};")
    for e in universe:
        eid = event_ids[e]
        lines.append(
            f"formula {eid}_enabled = ({eid}_req=true) & ({eid}_block=false);"
        )
    lines.append("module main")
    lines.append(f"\tevent: [-1..{len(universe) - 1}] init -1;")
    for idx, e in enumerate(universe):
        eid = event_ids[e]
        lines.append(f"\t[{eid}] ({eid}_enabled=true) -> 1: (event'={idx});")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


def translate_program_prism(
    graphs: Sequence[BThreadGraph], universe: Sequence[Event]
) -> str:
    """Emit a complete PRISM mdp model for the explored program."""
    universe = sort_events(universe)
    event_ids = event_identifiers(universe)
    thread_ids = thread_identifiers([g.name for g in graphs])
    if "main" in thread_ids.values():
        raise ValueError("b-thread name 'main' collides with the PRISM main module")
    header = ["mdp", ""]
    header.append(
        "// event indices: "
        + " ".join(f"{i}={event_ids[e]}" for i, e in enumerate(universe))
    )
    header.append("")
    parts = ["\n".join(header)]
    for g in graphs:
        parts.append(
            translate_bthread_prism(g, thread_ids[g.name], universe, event_ids)
        )
    parts.append(translate_main_prism(graphs, universe, event_ids, thread_ids))
    return "\n".join(parts)


def properties_text(
    universe: Sequence[Event], targets: Sequence[Event], mode: str = "max"
) -> str:
    """Render a .props sidecar querying reachability of target events."""
    universe = sort_events(universe)
    index = {e: i for i, e in enumerate(universe)}
    op = "Pmax" if mode.lower() == "max" else "Pmin"
    lines = []
    for t in targets:
        if t not in index:
            raise ValueError(f"target event {t!r} not in the universe")
        lines.append(f"{op}=? [ F event={index[t]} ];")
    return "\n".join(lines) + "\n"
