"""Discrete events and event sets.

An event is a named occurrence with an optional payload of scalar fields.
Event sets are predicates over events used for waiting and blocking; they
come in explicit, universal, predicate, union, and complement flavors so
membership stays total and cheap to evaluate.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping, Union

Scalar = Union[int, float, bool, str]


class Event:
    """An immutable named event with an optional ordered payload."""

    __slots__ = ("name", "payload", "_hash")

    def __init__(self, name: str, payload: Mapping[str, Scalar] | None = None):
        if not name:
            raise ValueError("event name must be non-empty")
        self.name = name
        self.payload = tuple(payload.items()) if payload else ()
        self._hash = hash((self.name, self.payload))

    def get(self, key: str, default: Scalar | None = None) -> Scalar | None:
        for k, v in self.payload:
            if k == key:
                return v
        return default

    def __eq__(self, other) -> bool:
        if not isinstance(other, Event):
            return NotImplemented
        return self.name == other.name and self.payload == other.payload

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        if self.payload:
            fields = ", ".join(f"{k}={v!r}" for k, v in self.payload)
            return f"Event({self.name!r}, {fields})"
        return f"Event({self.name!r})"

    def __lt__(self, other: "Event") -> bool:
        return (self.name, self.payload) < (other.name, other.payload)


class EventSet:
    """Base class for event predicates. Membership is total and deterministic."""

    def __contains__(self, event: Event) -> bool:
        raise NotImplementedError

    def __or__(self, other: "EventSet") -> "EventSet":
        return Union_([self, other])

    def __invert__(self) -> "EventSet":
        return Complement(self)


class Explicit(EventSet):
    """A finite set of events."""

    def __init__(self, events: Iterable[Event] = ()):
        self.events = frozenset(events)

    def __contains__(self, event: Event) -> bool:
        return event in self.events

    def __repr__(self) -> str:
        return f"Explicit({sorted(self.events)!r})"


class AllEvents(EventSet):
    """The universal event set; contains every event."""

    def __contains__(self, event: Event) -> bool:
        return True

    def __repr__(self) -> str:
        return "AllEvents()"


class Predicate(EventSet):
    """A named membership function over events."""

    def __init__(self, name: str, fn: Callable[[Event], bool]):
        self.name = name
        self.fn = fn

    def __contains__(self, event: Event) -> bool:
        return bool(self.fn(event))

    def __repr__(self) -> str:
        return f"Predicate({self.name!r})"


class Union_(EventSet):
    def __init__(self, parts: Iterable[EventSet]):
        self.parts = tuple(parts)

    def __contains__(self, event: Event) -> bool:
        return any(event in p for p in self.parts)

    def __repr__(self) -> str:
        return f"Union({list(self.parts)!r})"


class Complement(EventSet):
    def __init__(self, inner: EventSet):
        self.inner = inner

    def __contains__(self, event: Event) -> bool:
        return event not in self.inner

    def __repr__(self) -> str:
        return f"Complement({self.inner!r})"


EMPTY = Explicit(())
ALL = AllEvents()


def as_event_set(value) -> EventSet:
    """Coerce an Event, iterable of events, or EventSet into an EventSet."""
    if value is None:
        return EMPTY
    if isinstance(value, EventSet):
        return value
    if isinstance(value, Event):
        return Explicit([value])
    return Explicit(value)
