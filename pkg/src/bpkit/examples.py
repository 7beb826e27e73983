"""Parameterized benchmark b-programs shared by tests, CLI, and benches.

Discrete constructors return a BProgram; solver-based constructors
return a SolverProgram bundling the program with its constraint
variables.  All constructors are deterministic given their parameters;
randomness enters only through choice statements at runtime.
"""

from __future__ import annotations

import inspect
import math
from dataclasses import dataclass, field
from typing import Callable

from .bprogram import BProgram, BThread
from .events import ALL, Event, Explicit, Predicate
from .smt import formula as F
from .statements import choice, sync
from .smt.runner import csync


class InvalidParameters(ValueError):
    pass


@dataclass
class SolverProgram:
    """A constraint-based b-program plus the variables its events assign."""

    program: BProgram
    variables: list
    # optional metadata used by environments and tests
    meta: dict = field(default_factory=dict)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise InvalidParameters(message)


# --------------------------------------------------------------------------
# Water taps
# --------------------------------------------------------------------------

HOT = Event("HOT")


def hot_cold(n: int = 3, m: int = 1) -> BProgram:
    """n portions of hot plus n portions from each of m cold taps.

    The control thread forbids two consecutive HOT events by blocking
    HOT while waiting for any other event after each HOT.
    """
    _require(n >= 1, "n must be >= 1")
    _require(m >= 1, "m must be >= 1")
    cold_events = (
        [Event("COLD")] if m == 1 else [Event(f"COLD{j}") for j in range(m)]
    )

    def add_hot():
        for _ in range(n):
            yield sync(request=HOT)

    def add_cold(cold: Event):
        def body():
            for _ in range(n):
                yield sync(request=cold)

        return body

    def control():
        while True:
            yield sync(waitFor=HOT)
            yield sync(waitFor=ALL, block=HOT)

    threads = [BThread("add_hot", add_hot)]
    for j, cold in enumerate(cold_events):
        name = "add_cold" if m == 1 else f"add_cold{j}"
        threads.append(BThread(name, add_cold(cold)))
    threads.append(BThread("control", control))
    return BProgram(threads, "hot_cold")


# --------------------------------------------------------------------------
# Uneven coin flip
# --------------------------------------------------------------------------


def coin_flip() -> BProgram:
    def body():
        side = yield choice({"heads": 0.4, "tails": 0.6})
        yield sync(request=Event(side))

    return BProgram([BThread("coin_flip", body)], "coin_flip")


# --------------------------------------------------------------------------
# Monty Hall
# --------------------------------------------------------------------------


def monty_hall(d: int = 3, p: int = 1, o: int = 1) -> BProgram:
    """d doors, p prizes, o doors opened by the host before the reveal."""
    _require(d >= 2, "d must be >= 2")
    _require(1 <= p, "p must be >= 1")
    _require(1 <= o, "o must be >= 1")
    _require(o <= d - p - 1, "o must be <= d - p - 1 so a door remains openable")
    doors = list(range(d))
    all_open = [Event(f"open{i}") for i in doors]

    def hide_prizes():
        prizes = yield choice(
            {i: 1 / len(doors) for i in doors}, repeat=p, replace=False, sorted=True
        )
        if p == 1:
            prizes = (prizes,)
        for hide in prizes:
            yield sync(request=Event(f"hide{hide}"))
        yield sync(request=Event("done_hiding"))
        dont_open = [Event(f"open{i}") for i in prizes]
        yield sync(block=dont_open, waitFor=Event("done_opening"))
        door = yield sync(waitFor=all_open)
        yield sync(request=Event("win" if int(door.name[4:]) in prizes else "lose"))

    def make_a_guess():
        yield sync(waitFor=Event("done_hiding"))
        yield sync(request=Event("guess0"))
        yield sync(block=Event("open0"))

    def open_doors():
        yield sync(waitFor=[Event(f"guess{i}") for i in doors])
        blocked = []
        for _ in range(o):
            e = yield sync(request=all_open, block=blocked)
            blocked = blocked + [e]
        yield sync(request=Event("done_opening"))
        yield sync(request=all_open, block=blocked)

    return BProgram(
        [
            BThread("hide_prizes", hide_prizes),
            BThread("make_a_guess", make_a_guess),
            BThread("open_doors", open_doors),
        ],
        "monty_hall",
    )


# --------------------------------------------------------------------------
# Knuth's fair dice from fair coins
# --------------------------------------------------------------------------


def _dice_layers(n: int) -> list[int]:
    sizes: set[int] = set()
    stack = [1]
    while stack:
        u = stack.pop()
        if u in sizes:
            continue
        sizes.add(u)
        if u < n:
            stack.append(2 * u)
        elif u > n:
            stack.append(u - n)
    return sorted(sizes)


def knuth_dice(n: int = 6) -> BProgram:
    """A fair n-sided dice simulated with fair coin flips.

    Tree nodes halve probability layer by layer; leaves past n wrap back
    to an inner layer, forming the rejection loop.
    """
    _require(n >= 2, "n must be >= 2")

    def node(u: int, x: int):
        def body():
            while True:
                yield sync(waitFor=Event(f"n{u}_{x}"))
                if u < n:  # inner node: toss a coin, descend
                    flip = yield choice({0: 0.5, 1: 0.5})
                    yield sync(request=Event(f"n{u * 2}_{2 * x + flip}"))
                else:  # last layer: report or start over
                    if x >= n:
                        yield sync(request=Event(f"n{u - n}_{x - n}"))
                    else:
                        yield sync(request=Event(f"result_{x}"))

        return body

    def start():
        yield sync(request=Event("n1_0"))

    threads = [BThread("start", start)]
    for u in _dice_layers(n):
        for x in range(u):
            threads.append(BThread(f"node_{u}_{x}", node(u, x)))
    return BProgram(threads, "knuth_dice")


# --------------------------------------------------------------------------
# Blueberry pancake maker
# --------------------------------------------------------------------------

DRY = Event("DryMixture")
WET = Event("WetMixture")
THICK_UP = Event("ThicknessUp")
THICK_DOWN = Event("ThicknessDown")
BLUEBERRIES = Event("AddBlueberries")
MIXTURE_ADD = Explicit([DRY, WET])
ANY_THICK = Explicit([THICK_UP, THICK_DOWN])


def pancake(n: int = 2, b: int = 1) -> BProgram:
    """Batter for n pancakes; thickness must stay within [-b, b].

    Blueberries may only go in after 75% of the mixtures when the batter
    is thin; their thread carries the rewards used by the RL environment.
    """
    _require(n >= 1, "n must be >= 1")
    _require(b >= 1, "b must be >= 1")

    def add_dry_mixture():
        for _ in range(n):
            yield sync(request=DRY)

    def add_wet_mixture():
        for _ in range(n):
            yield sync(request=WET)

    def thickness_meter():
        while True:
            e = yield sync(waitFor=MIXTURE_ADD)
            if e == DRY:
                yield sync(request=THICK_UP, block=MIXTURE_ADD)
            else:
                yield sync(request=THICK_DOWN, block=MIXTURE_ADD)

    def range_arbiter():
        thickness = 0
        while True:
            e = yield sync(waitFor=ANY_THICK)
            thickness += 1 if e == THICK_UP else -1
            if abs(thickness) >= b:
                block_e = DRY if thickness > 0 else WET
                yield sync(block=block_e, waitFor=MIXTURE_ADD)
            else:
                yield sync(waitFor=MIXTURE_ADD)

    def blueberries():
        yield sync(request=BLUEBERRIES, localReward=-0.0001)
        yield sync(waitFor=ALL, localReward=1)

    def enough_batter():
        for _ in range(int((n * 3) / 2)):
            yield sync(waitFor=MIXTURE_ADD, block=BLUEBERRIES)

    def batter_thin_enough():
        thickness = 0
        while True:
            if thickness >= 0:
                e = yield sync(waitFor=ANY_THICK, block=BLUEBERRIES)
            else:
                e = yield sync(waitFor=ANY_THICK)
            thickness += 1 if e == THICK_UP else -1

    return BProgram(
        [
            BThread("add_dry_mixture", add_dry_mixture),
            BThread("add_wet_mixture", add_wet_mixture),
            BThread("thickness_meter", thickness_meter),
            BThread("range_arbiter", range_arbiter),
            BThread("blueberries", blueberries),
            BThread("enough_batter", enough_batter),
            BThread("batter_thin_enough", batter_thin_enough),
        ],
        "pancake",
    )


# --------------------------------------------------------------------------
# Cinderella-Stepmother
# --------------------------------------------------------------------------


def cinderella_smt(
    n: int = 5, b: int = 8, c: int = 2, a: int = 5, steps: int = 50
) -> SolverProgram:
    """Stepmother adds `a` units; Cinderella empties `c` adjacent buckets.

    Bucket levels are integer variables; the capacity bound `b` is a
    standing blocking constraint, so every selected assignment respects it.
    """
    _require(n >= 2, "n must be >= 2")
    _require(1 <= c < n, "c must be in [1, n)")
    _require(a >= 1 and b >= 1 and steps >= 1, "a, b, steps must be >= 1")
    buckets = [F.Variable(f"b{i}", F.INT) for i in range(n)]

    def stepmother(prev: F.Assignment):
        added = F.Sum([bk - prev[bk] for bk in buckets])
        non_neg = F.And([bk - prev[bk] >= 0 for bk in buckets])
        return F.And([F.Eq(added, F.Const(a)), non_neg])

    def cinderella(prev: F.Assignment):
        r = list(range(n)) + list(range(n))

        def empty(rng):
            cs = []
            for j in range(n):
                if j in rng:
                    cs.append(buckets[j].eq(0))
                else:
                    cs.append(buckets[j].eq(prev[buckets[j]]))
            return F.And(cs)

        return F.Or([empty(r[i : i + c]) for i in range(n)])

    def bucket_limit():
        while True:
            yield csync(block=F.Or([bk > b for bk in buckets]))

    def game_loop():
        e = yield csync(request=F.And([bk.eq(0) for bk in buckets]))
        for _ in range(steps):
            e = yield csync(request=stepmother(e))
            e = yield csync(request=cinderella(e))

    bp = BProgram(
        [BThread("bucket_limit", bucket_limit), BThread("game_loop", game_loop)],
        "cinderella_smt",
    )
    return SolverProgram(bp, list(buckets), {"capacity": b})


def _compositions(total: int, parts: int):
    """All tuples of `parts` non-negative ints summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def _cfg_event(levels: tuple[int, ...]) -> Event:
    return Event("cfg_" + "_".join(str(v) for v in levels))


def cfg_levels(e: Event) -> tuple[int, ...]:
    return tuple(int(t) for t in e.name[4:].split("_"))


def cinderella_discrete(
    n: int = 3, b: int = 2, c: int = 1, a: int = 1, steps: int = 4
) -> BProgram:
    """Discrete variant: every bucket configuration is its own event."""
    _require(n >= 2, "n must be >= 2")
    _require(1 <= c < n, "c must be in [1, n)")
    _require(a >= 1 and b >= 1 and steps >= 1, "a, b, steps must be >= 1")

    def over_limit(e: Event) -> bool:
        return e.name.startswith("cfg_") and any(v > b for v in cfg_levels(e))

    def stepmother_moves(levels: tuple[int, ...]) -> list[Event]:
        return [
            _cfg_event(tuple(v + add for v, add in zip(levels, extra)))
            for extra in _compositions(a, n)
        ]

    def cinderella_moves(levels: tuple[int, ...]) -> list[Event]:
        ring = list(range(n)) + list(range(n))
        seen = set()
        out = []
        for i in range(n):
            emptied = set(ring[i : i + c])
            nxt = tuple(0 if j in emptied else levels[j] for j in range(n))
            if nxt not in seen:
                seen.add(nxt)
                out.append(_cfg_event(nxt))
        return out

    def bucket_limit():
        while True:
            yield sync(block=Predicate("over_limit", over_limit))

    def game_loop():
        e = yield sync(request=_cfg_event(tuple(0 for _ in range(n))))
        for _ in range(steps):
            e = yield sync(request=stepmother_moves(cfg_levels(e)))
            e = yield sync(request=cinderella_moves(cfg_levels(e)))

    return BProgram(
        [BThread("bucket_limit", bucket_limit), BThread("game_loop", game_loop)],
        "cinderella_discrete",
    )


# --------------------------------------------------------------------------
# Bit-flip
# --------------------------------------------------------------------------


def chessboard(n: int, m: int) -> tuple[tuple[bool, ...], ...]:
    return tuple(tuple((i + j) % 2 == 0 for j in range(m)) for i in range(n))


def apply_flip(board, kind: str, index: int):
    if kind == "row":
        return tuple(
            tuple(not v for v in row) if i == index else row
            for i, row in enumerate(board)
        )
    return tuple(
        tuple(not v if j == index else v for j, v in enumerate(row))
        for row in board
    )


def bitflip_discrete(n: int = 2, m: int = 2) -> BProgram:
    """Flip whole rows/columns; the line just flipped is blocked once."""
    _require(n >= 1 and m >= 1, "n and m must be >= 1")
    flips = [Event("flip", {"kind": "row", "index": i}) for i in range(n)]
    flips += [Event("flip", {"kind": "col", "index": j}) for j in range(m)]

    def flipper():
        last = None
        while True:
            e = yield sync(request=flips, block=last)
            last = e

    return BProgram([BThread("flipper", flipper)], "bitflip_discrete")


def bitflip_variables(n: int, m: int) -> list[list[F.Variable]]:
    return [[F.Variable(f"p{i}_{j}", F.BOOL) for j in range(m)] for i in range(n)]


def row_flip(p, i: int, prev: F.Assignment):
    cs = []
    for r, row in enumerate(p):
        for v in row:
            cs.append(v.eq(F.Const(not prev[v])) if r == i else v.eq(F.Const(prev[v])))
    return F.And(cs)


def col_flip(p, j: int, prev: F.Assignment):
    cs = []
    for row in p:
        for c, v in enumerate(row):
            cs.append(v.eq(F.Const(not prev[v])) if c == j else v.eq(F.Const(prev[v])))
    return F.And(cs)


def board_from_assignment(p, a: F.Assignment):
    return tuple(tuple(bool(a[v]) for v in row) for row in p)


def _chess_formula(p):
    cs = []
    for i, row in enumerate(p):
        for j, v in enumerate(row):
            cs.append(v.eq(F.Const((i + j) % 2 == 0)))
    return F.And(cs)


def bitflip_smt(n: int = 2, m: int = 2) -> SolverProgram:
    """Solver-based single-player variant of the row/column flip game."""
    _require(n >= 1 and m >= 1, "n and m must be >= 1")
    p = bitflip_variables(n, m)
    flat = [v for row in p for v in row]

    def flipped_line(prev: F.Assignment, cur: F.Assignment):
        before = board_from_assignment(p, prev)
        after = board_from_assignment(p, cur)
        for i in range(n):
            if after == apply_flip(before, "row", i):
                return ("row", i)
        for j in range(m):
            if after == apply_flip(before, "col", j):
                return ("col", j)
        raise RuntimeError("selected assignment is not a single line flip")

    def player():
        e = yield csync(request=_chess_formula(p))
        last = None
        while True:
            moves = [row_flip(p, i, e) for i in range(n)]
            moves += [col_flip(p, j, e) for j in range(m)]
            blocked = None
            if last is not None:
                kind, idx = last
                blocked = (
                    row_flip(p, idx, e) if kind == "row" else col_flip(p, idx, e)
                )
            new = yield csync(request=F.disj(moves), block=blocked)
            last = flipped_line(e, new)
            e = new

    bp = BProgram([BThread("player", player)], "bitflip_smt")
    return SolverProgram(bp, flat, {"shape": (n, m)})


def bitflip_two_player(n: int = 3, m: int = 3) -> SolverProgram:
    """Two-player variant: a random opponent and an action-driven player.

    The opponent alternates random row and column flips; in between, the
    player's move is constrained through the integer `action` variable
    (rows first, columns offset by n).  A monitor thread pays 2^(bits
    newly turned on) after every move.
    """
    _require(n >= 1 and m >= 1, "n and m must be >= 1")
    p = bitflip_variables(n, m)
    flat = [v for row in p for v in row]
    action = F.Variable("action", F.INT)

    def row_actions(e):
        return F.And([F.Implies(action.eq(i), row_flip(p, i, e)) for i in range(n)])

    def col_actions(e):
        return F.And(
            [F.Implies(action.eq(n + j), col_flip(p, j, e)) for j in range(m)]
        )

    def init():
        yield csync(request=F.And([_chess_formula(p), action.eq(0)]))

    def action_range():
        # keep the action variable bounded in every selected assignment
        while True:
            yield csync(block=F.Or([action < 0, action >= n + m]))

    def opponent():
        e = yield csync(waitFor=F.TRUE)
        while True:
            i = yield choice({k: 1 / n for k in range(n)})
            yield csync(request=row_flip(p, i, e))
            e = yield csync(waitFor=F.TRUE)
            j = yield choice({k: 1 / m for k in range(m)})
            yield csync(request=col_flip(p, j, e))
            e = yield csync(waitFor=F.TRUE)

    def controller():
        e = yield csync(waitFor=F.TRUE)
        while True:
            e = yield csync(waitFor=F.TRUE)
            yield csync(
                request=F.And([action >= 0, action < n]),
                block=F.Not(row_actions(e)),
                waitFor=F.TRUE,
            )
            e = yield csync(waitFor=F.TRUE)
            yield csync(
                request=F.And([action >= n, action < n + m]),
                block=F.Not(col_actions(e)),
                waitFor=F.TRUE,
            )

    def count_reward(e_0, e_1) -> float:
        if e_0 is None or e_1 is None:
            return 0
        turned_on = sum(
            1 for v in flat if bool(e_1[v]) and not bool(e_0[v])
        )
        return 2**turned_on

    def reward_bt():
        e_0, e_1 = None, None
        while True:
            e_0, e_1 = e_1, (
                yield csync(waitFor=F.TRUE, localReward=count_reward(e_0, e_1))
            )

    bp = BProgram(
        [
            BThread("init", init),
            BThread("action_range", action_range),
            BThread("opponent", opponent),
            BThread("controller", controller),
            BThread("reward_bt", reward_bt),
        ],
        "bitflip_two_player",
    )
    return SolverProgram(
        bp,
        flat + [action],
        {"shape": (n, m), "action_var": action, "board_vars": p},
    )


# --------------------------------------------------------------------------
# Circled polygon
# --------------------------------------------------------------------------


def circled_polygon(n_edges: int = 4) -> SolverProgram:
    """Find a point inside the unit circle but outside the inscribed n-gon."""
    _require(n_edges >= 3, "n_edges must be >= 3")
    x = F.Variable("x", F.REAL)
    y = F.Variable("y", F.REAL)
    apothem = math.cos(math.pi / n_edges)
    halfplanes = []
    for k in range(n_edges):
        phi = 2 * math.pi * k / n_edges
        lhs = F.Add([F.Mul(F.Const(math.cos(phi)), x), F.Mul(F.Const(math.sin(phi)), y)])
        halfplanes.append(F.Gt(lhs, F.Const(apothem)))

    def stay_in_circle():
        while True:
            yield csync(block=F.Gt(F.Add([x * x, y * y]), F.Const(1.0)))

    def seeker():
        yield csync(request=F.disj(halfplanes))

    bp = BProgram(
        [BThread("stay_in_circle", stay_in_circle), BThread("seeker", seeker)],
        "circled_polygon",
    )
    return SolverProgram(bp, [x, y], {"n_edges": n_edges, "apothem": apothem})


def outside_polygon(n_edges: int, px: float, py: float) -> bool:
    """Direct geometric check matching circled_polygon's constraints."""
    apothem = math.cos(math.pi / n_edges)
    return any(
        math.cos(2 * math.pi * k / n_edges) * px
        + math.sin(2 * math.pi * k / n_edges) * py
        > apothem
        for k in range(n_edges)
    )


# --------------------------------------------------------------------------
# Registry
# --------------------------------------------------------------------------

REGISTRY: dict[str, Callable] = {
    "hot_cold": hot_cold,
    "coin_flip": coin_flip,
    "monty_hall": monty_hall,
    "knuth_dice": knuth_dice,
    "pancake": pancake,
    "cinderella_discrete": cinderella_discrete,
    "cinderella_smt": cinderella_smt,
    "bitflip_discrete": bitflip_discrete,
    "bitflip_smt": bitflip_smt,
    "bitflip_two_player": bitflip_two_player,
    "circled_polygon": circled_polygon,
}


def build_example(name: str, **params):
    """Instantiate a registered example, validating parameter names."""
    if name not in REGISTRY:
        raise InvalidParameters(
            f"unknown example {name!r}; known: {', '.join(sorted(REGISTRY))}"
        )
    ctor = REGISTRY[name]
    sig = inspect.signature(ctor)
    for key in params:
        if key not in sig.parameters:
            raise InvalidParameters(
                f"example {name!r} takes no parameter {key!r} "
                f"(accepted: {', '.join(sig.parameters)})"
            )
    return ctor(**params)
