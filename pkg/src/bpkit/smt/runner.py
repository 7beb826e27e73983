"""Constraint-based b-program execution.

Here an "event" is a satisfying assignment to a set of declared
variables.  Each b-thread yields a ConstraintStatement whose request,
wait-for, and block fields are formulas; one sync point composes the
query (disjunction of requests, conjunction of negated blocks), sends
it to the solver in a fresh session, and resumes every thread whose
request or wait-for formula holds under the returned model.  An unsat
answer is a deadlock.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from ..bprogram import BProgram, BThreadError, Terminal
from ..choice import ChoiceSpec, sample
from . import formula as F
from .solver import SolverConfig, SolveResult, discover_solver, solve


class ConstraintStatement:
    """A sync-point declaration in the solver-based idiom.

    Each field is a formula over the program's variables: `request`
    proposes assignments, `block` forbids them, `wait_for` subscribes
    to assignments chosen by others.
    """

    __slots__ = ("request", "wait_for", "block", "local_reward")

    def __init__(
        self,
        request=None,
        wait_for=None,
        block=None,
        local_reward: float = 0.0,
    ):
        self.request = F.FALSE if request is None else request
        self.wait_for = F.FALSE if wait_for is None else wait_for
        self.block = F.FALSE if block is None else block
        if not math.isfinite(local_reward):
            raise ValueError("local_reward must be finite")
        self.local_reward = float(local_reward)

    def __repr__(self) -> str:
        return (
            f"ConstraintStatement(request={self.request!r}, "
            f"wait_for={self.wait_for!r}, block={self.block!r}, "
            f"local_reward={self.local_reward})"
        )


def csync(request=None, waitFor=None, block=None, localReward: float = 0.0):
    """Convenience constructor mirroring the discrete `sync` helper."""
    return ConstraintStatement(request, waitFor, block, localReward)


def compose_query(statements: Sequence[ConstraintStatement]):
    """(at least one request holds) and (no block holds)."""
    requests = [st.request for st in statements if st.request is not F.FALSE]
    blocks = [st.block for st in statements if st.block is not F.FALSE]
    parts = [F.disj(requests)]
    parts.extend(F.Not(b) for b in blocks)
    return F.conj(parts)


def constraint_wakeup(st: ConstraintStatement, model: F.Assignment) -> bool:
    """True iff the model satisfies the statement's request or wait-for."""
    if st.request is not F.FALSE and F.eval_formula(st.request, model):
        return True
    if st.wait_for is not F.FALSE and F.eval_formula(st.wait_for, model):
        return True
    return False


@dataclass
class SmtTrace:
    """An executed assignment sequence with rewards and a terminal class."""

    models: list[F.Assignment]
    rewards: list[float]
    terminal: Terminal
    choices: list = field(default_factory=list)

    @property
    def total_reward(self) -> float:
        return sum(self.rewards)


class SmtExecution:
    """One live constraint-based run, stepped sync point by sync point."""

    def __init__(
        self,
        bp: BProgram,
        variables: Sequence[F.Variable],
        config: SolverConfig | None = None,
        extra_constraints: Callable[[], Any] | None = None,
    ):
        self.bp = bp
        self.variables = list(variables)
        self.config = config if config is not None else discover_solver()
        self.extra_constraints = extra_constraints
        self._step = 0
        self.threads = []
        for bt in bp.threads:
            self.threads.append([bt.name, bt.factory(), None, False])
            self._resume(self.threads[-1], None)

    @staticmethod
    def _resume(entry, value) -> None:
        name, gen = entry[0], entry[1]
        try:
            entry[2] = gen.send(value)
        except StopIteration:
            entry[2] = None
            entry[3] = True
        except BaseException as exc:
            raise BThreadError(name, exc) from exc

    def pending_choice(self):
        for i, entry in enumerate(self.threads):
            if isinstance(entry[2], ChoiceSpec):
                return i, entry[2]
        return None

    def resolve_choice(self, idx: int, outcome) -> None:
        self._resume(self.threads[idx], outcome)

    def statements(self) -> list[ConstraintStatement]:
        out = []
        for entry in self.threads:
            st = entry[2]
            if st is not None:
                if not isinstance(st, ConstraintStatement):
                    raise BThreadError(entry[0], TypeError(f"unexpected yield {st!r}"))
                out.append(st)
        return out

    def has_requests(self) -> bool:
        return any(st.request is not F.FALSE for st in self.statements())

    def step_reward(self) -> float:
        return sum(st.local_reward for st in self.statements())

    def query(self):
        q = compose_query(self.statements())
        if self.extra_constraints is not None:
            extra = self.extra_constraints()
            if extra is not None:
                q = F.conj([q, extra])
        return q

    def solve_step(self) -> SolveResult:
        """Run the solver for the current sync point (fresh session)."""
        config = self.config
        if config.seed is not None:
            # vary the seed per sync point so repeated queries differ,
            # while the whole run stays reproducible
            config = config.with_seed(config.seed + self._step)
        return solve(self.variables, self.query(), config)

    def advance(self, model: F.Assignment) -> None:
        self._step += 1
        for entry in self.threads:
            st = entry[2]
            if st is not None and constraint_wakeup(st, model):
                self._resume(entry, model)


def run_smt(
    bp: BProgram,
    variables: Sequence[F.Variable],
    config: SolverConfig | None = None,
    max_steps: int = 10**4,
    seed: int | None = None,
    extra_constraints: Callable[[], Any] | None = None,
) -> SmtTrace:
    """Execute the constraint-based sync loop until deadlock or the limit.

    `seed` drives choice resolution and, when the config carries no seed
    of its own, the solver's :random-seed option.
    """
    if config is None:
        config = discover_solver()
    if config.seed is None and seed is not None:
        config = config.with_seed(seed)
    ex = SmtExecution(bp, variables, config, extra_constraints)
    rng = random.Random(seed)
    models: list[F.Assignment] = []
    rewards: list[float] = []
    choices: list = []

    for _ in range(max_steps):
        pending = ex.pending_choice()
        while pending is not None:
            idx, spec = pending
            outcome = sample(spec, rng)
            choices.append((idx, outcome))
            ex.resolve_choice(idx, outcome)
            pending = ex.pending_choice()
        if not ex.has_requests():
            return SmtTrace(models, rewards, Terminal.COMPLETED, choices)
        result = ex.solve_step()
        if result.status == "unsat":
            return SmtTrace(models, rewards, Terminal.DEADLOCK, choices)
        if result.status != "sat":
            raise RuntimeError(f"solver answered {result.status!r} at a sync point")
        rewards.append(ex.step_reward())
        models.append(result.model)
        ex.advance(result.model)
    return SmtTrace(models, rewards, Terminal.STEP_LIMIT, choices)
