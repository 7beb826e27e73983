"""Solver-backed event selection: formulas, SMT-LIB2 I/O, and the run loop."""

from . import formula
from .formula import (
    BOOL,
    INT,
    REAL,
    Assignment,
    Const,
    MissingVariable,
    SortError,
    Variable,
    conj,
    disj,
)
from .runner import (
    ConstraintStatement,
    SmtExecution,
    SmtTrace,
    compose_query,
    constraint_wakeup,
    csync,
    run_smt,
)
from .smtlib import ParseError, emit_smtlib, parse_model, render
from .solver import (
    BUILTIN,
    SolveResult,
    SolverConfig,
    SolverTimeout,
    SolverUnavailable,
    discover_solver,
    solve,
)

__all__ = [
    "BOOL",
    "INT",
    "REAL",
    "BUILTIN",
    "Assignment",
    "Const",
    "ConstraintStatement",
    "MissingVariable",
    "ParseError",
    "SmtExecution",
    "SmtTrace",
    "SolveResult",
    "SolverConfig",
    "SolverTimeout",
    "SolverUnavailable",
    "SortError",
    "Variable",
    "compose_query",
    "conj",
    "constraint_wakeup",
    "csync",
    "discover_solver",
    "disj",
    "emit_smtlib",
    "formula",
    "parse_model",
    "render",
    "run_smt",
    "solve",
]
