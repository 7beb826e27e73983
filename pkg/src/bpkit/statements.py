"""Statements yielded by b-threads at synchronization points."""

from __future__ import annotations

import math
from typing import Any, Mapping, Sequence

from .choice import ChoiceSpec
from .events import EMPTY, Event, EventSet, as_event_set


class Sync:
    """One b-thread's declaration at a sync point.

    `request` is an ordered sequence of events (order feeds the First
    selection policy), `wait_for` and `block` are event sets, and
    `local_reward` is paid into the step reward while this statement is
    the thread's current statement.
    """

    __slots__ = ("request", "wait_for", "block", "local_reward")

    def __init__(
        self,
        request: Event | Sequence[Event] | None = None,
        wait_for: Event | EventSet | Sequence[Event] | None = None,
        block: Event | EventSet | Sequence[Event] | None = None,
        local_reward: float = 0.0,
    ):
        if request is None:
            req: tuple[Event, ...] = ()
        elif isinstance(request, Event):
            req = (request,)
        else:
            req = tuple(request)
        if len(set(req)) != len(req):
            raise ValueError("request sequence has duplicate events")
        if not math.isfinite(local_reward):
            raise ValueError("local_reward must be finite")
        self.request = req
        self.wait_for = as_event_set(wait_for) if wait_for is not None else EMPTY
        self.block = as_event_set(block) if block is not None else EMPTY
        self.local_reward = float(local_reward)

    def __repr__(self) -> str:
        return (
            f"Sync(request={list(self.request)!r}, wait_for={self.wait_for!r}, "
            f"block={self.block!r}, local_reward={self.local_reward})"
        )


def sync(request=None, waitFor=None, block=None, localReward: float = 0.0) -> Sync:
    """Convenience constructor mirroring the usual b-thread style."""
    return Sync(request=request, wait_for=waitFor, block=block, local_reward=localReward)


def choice(
    distribution: Mapping[Any, float],
    repeat: int = 1,
    replace: bool = True,
    sorted: bool = False,
) -> ChoiceSpec:
    """A categorical draw to be yielded by a b-thread."""
    return ChoiceSpec(distribution, repeat=repeat, replace=replace, sorted=sorted)
