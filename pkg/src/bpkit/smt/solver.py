"""Subprocess client for external SMT-LIB2 solvers.

A solver is any executable that reads an SMT-LIB2 script on stdin and
prints `sat`/`unsat`/`unknown` plus a get-value response.  Discovery
order: the BPK_SMT_SOLVER environment variable, then z3/cvc5/cvc4/
yices-smt2 on PATH, then the bundled `bpk-minismt` script.  The special
executable name "builtin" runs the bundled solver in-process, skipping
process startup for tight solve loops.
"""

from __future__ import annotations

import os
import shutil
import subprocess
import sys
from dataclasses import dataclass, field
from typing import Sequence

from . import formula as F
from . import minisolver
from .smtlib import ParseError, emit_smtlib, parse_model

BUILTIN = "builtin"

_KNOWN_SOLVERS = ("z3", "cvc5", "cvc4", "yices-smt2")

# args that make each solver read a script from stdin
_DEFAULT_ARGS = {
    "z3": ("-in",),
    "cvc5": ("--lang", "smt2"),
    "cvc4": ("--lang", "smt2"),
    "yices-smt2": (),
}


class SolverUnavailable(RuntimeError):
    pass


class SolverTimeout(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    executable: str
    args: tuple = ()
    timeout_ms: int = 60_000
    seed: int | None = None

    def with_seed(self, seed: int | None) -> "SolverConfig":
        return SolverConfig(self.executable, self.args, self.timeout_ms, seed)


def discover_solver(timeout_ms: int = 60_000, seed: int | None = None) -> SolverConfig:
    """Find a usable solver; raises SolverUnavailable if none exists."""
    override = os.environ.get("BPK_SMT_SOLVER")
    if override:
        parts = override.split()
        exe, extra = parts[0], tuple(parts[1:])
        if exe == BUILTIN:
            return SolverConfig(BUILTIN, extra, timeout_ms, seed)
        path = shutil.which(exe)
        if path is None:
            raise SolverUnavailable(f"BPK_SMT_SOLVER={override!r} not found on PATH")
        base = os.path.basename(exe)
        args = extra if extra else _DEFAULT_ARGS.get(base, ())
        return SolverConfig(path, args, timeout_ms, seed)
    for name in _KNOWN_SOLVERS:
        path = shutil.which(name)
        if path is not None:
            return SolverConfig(path, _DEFAULT_ARGS[name], timeout_ms, seed)
    path = shutil.which("bpk-minismt")
    if path is not None:
        return SolverConfig(path, (), timeout_ms, seed)
    # installed but PATH-less environments still get the in-process solver
    return SolverConfig(BUILTIN, (), timeout_ms, seed)


def _invoke(config: SolverConfig, script: str) -> str:
    if config.executable == BUILTIN:
        return minisolver.solve_script(script)
    try:
        proc = subprocess.run(
            [config.executable, *config.args],
            input=script,
            capture_output=True,
            text=True,
            timeout=config.timeout_ms / 1000.0,
        )
    except FileNotFoundError as exc:
        raise SolverUnavailable(f"solver {config.executable!r} not found") from exc
    except subprocess.TimeoutExpired as exc:
        raise SolverTimeout(
            f"solver {config.executable!r} exceeded {config.timeout_ms} ms"
        ) from exc
    return proc.stdout


@dataclass
class SolveResult:
    status: str  # "sat" | "unsat" | "unknown"
    model: F.Assignment | None = None


def solve(
    variables: Sequence[F.Variable],
    query,
    config: SolverConfig | None = None,
) -> SolveResult:
    """Run one check-sat/get-value round trip against the configured solver."""
    if config is None:
        config = discover_solver()
    variables = sorted(set(variables), key=lambda v: v.name)
    script = emit_smtlib(variables, query, seed=config.seed)
    output = _invoke(config, script)
    lines = [ln.strip() for ln in output.splitlines() if ln.strip()]
    if not lines:
        raise ParseError(f"solver produced no output for script:\n{script}")
    status = None
    rest_start = None
    for i, ln in enumerate(lines):
        if ln in ("sat", "unsat", "unknown"):
            status = ln
            rest_start = i + 1
            break
        if ln.startswith("(error"):
            raise ParseError(f"solver error: {ln}")
    if status is None:
        raise ParseError(f"unrecognized solver output: {output!r}")
    if status != "sat":
        return SolveResult(status)
    if not variables:
        return SolveResult("sat", F.Assignment({}))
    rest = "\n".join(lines[rest_start:])
    return SolveResult("sat", parse_model(rest, variables))
