"""Mapping event and b-thread names to model-checker identifiers.

SMV and PRISM identifiers are [A-Za-z_][A-Za-z0-9_]*.  Names are escaped
reversibly: any other character becomes `_xHH` (hex code), and payload
fields are appended as `_<key>_<value>`.  Distinct source names must map
to distinct identifiers; a collision is a hard error.
"""

from __future__ import annotations

import re
from typing import Iterable, Sequence

from .events import Event

_OK = re.compile(r"[A-Za-z0-9_]")
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class NameCollision(ValueError):
    pass


def escape(text: str) -> str:
    out = []
    for ch in text:
        if _OK.match(ch):
            out.append(ch)
        else:
            out.append(f"_x{ord(ch):02X}")
    s = "".join(out)
    if not s or not _IDENT.match(s):
        s = "_" + s
    return s


def event_identifier(e: Event) -> str:
    parts = [escape(e.name)]
    for k, v in e.payload:
        parts.append(escape(str(k)))
        parts.append(escape(str(v)))
    return "_".join(parts)


def _check_unique(pairs: Sequence[tuple[object, str]], what: str) -> dict:
    mapping: dict = {}
    seen: dict[str, object] = {}
    for source, ident in pairs:
        if ident in seen and seen[ident] != source:
            raise NameCollision(
                f"{what} {source!r} and {seen[ident]!r} both map to "
                f"identifier {ident!r}; rename one of them"
            )
        seen[ident] = source
        mapping[source] = ident
    return mapping


def event_identifiers(events: Iterable[Event]) -> dict[Event, str]:
    return _check_unique(
        [(e, event_identifier(e)) for e in events], "events"
    )


def thread_identifiers(names: Iterable[str]) -> dict[str, str]:
    return _check_unique([(n, escape(n)) for n in names], "b-threads")
