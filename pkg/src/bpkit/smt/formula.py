"""Sorted first-order formulas over Bool/Int/Real variables.

This is the constraint language b-threads use in solver-based programs:
boolean connectives, comparisons, and linear/nonlinear arithmetic.  The
AST is immutable and hashable so formulas can live in b-thread state.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

BOOL = "Bool"
INT = "Int"
REAL = "Real"


class SortError(TypeError):
    pass


class MissingVariable(KeyError):
    pass


class _TermOps:
    """Arithmetic / comparison sugar so constraint code reads naturally."""

    def __add__(self, other):
        return Add((self, _lift(other)))

    def __radd__(self, other):
        return Add((_lift(other), self))

    def __sub__(self, other):
        return Sub(self, _lift(other))

    def __rsub__(self, other):
        return Sub(_lift(other), self)

    def __mul__(self, other):
        return Mul(self, _lift(other))

    def __rmul__(self, other):
        return Mul(_lift(other), self)

    def eq(self, other):
        return Eq(self, _lift(other))

    def ne(self, other):
        return Ne(self, _lift(other))

    def __lt__(self, other):
        return Lt(self, _lift(other))

    def __le__(self, other):
        return Le(self, _lift(other))

    def __gt__(self, other):
        return Gt(self, _lift(other))

    def __ge__(self, other):
        return Ge(self, _lift(other))


@dataclass(frozen=True)
class Variable(_TermOps):
    name: str
    sort: str

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise ValueError(f"illegal variable name {self.name!r}")
        if self.sort not in (BOOL, INT, REAL):
            raise SortError(f"unknown sort {self.sort!r}")


@dataclass(frozen=True)
class Const:
    value: Union[bool, int, float, Fraction]

    @property
    def sort(self) -> str:
        if isinstance(self.value, bool):
            return BOOL
        if isinstance(self.value, int):
            return INT
        return REAL


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple

    def __init__(self, args: Iterable):
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Or:
    args: tuple

    def __init__(self, args: Iterable):
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class _BinRel:
    left: "Term"
    right: "Term"


class Eq(_BinRel):
    pass


class Ne(_BinRel):
    pass


class Lt(_BinRel):
    pass


class Le(_BinRel):
    pass


class Gt(_BinRel):
    pass


class Ge(_BinRel):
    pass


@dataclass(frozen=True)
class Add(_TermOps):
    args: tuple

    def __init__(self, args: Iterable):
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Sub(_TermOps):
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Mul(_TermOps):
    left: "Term"
    right: "Term"


Term = Union[Variable, Const, Add, Sub, Mul]
Formula = Union[Variable, Const, Not, And, Or, Implies, Eq, Ne, Lt, Le, Gt, Ge]

TRUE = Const(True)
FALSE = Const(False)


def _lift(v) -> Term:
    if isinstance(v, (Variable, Const, Add, Sub, Mul)):
        return v
    if isinstance(v, (bool, int, float, Fraction)):
        return Const(v)
    raise SortError(f"cannot lift {v!r} into a term")


def Sum(terms: Iterable) -> Term:
    terms = [_lift(t) for t in terms]
    if not terms:
        return Const(0)
    return Add(terms)


def conj(parts: Iterable) -> Formula:
    parts = list(parts)
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def disj(parts: Iterable) -> Formula:
    parts = list(parts)
    if not parts:
        return FALSE
    if len(parts) == 1:
        return parts[0]
    return Or(parts)


# --------------------------------------------------------------------------
# Sort checking and variable collection
# --------------------------------------------------------------------------

_NUMERIC = (INT, REAL)


def sort_of(node) -> str:
    """Compute the sort of a term/formula, raising SortError if ill-sorted."""
    if isinstance(node, Variable):
        return node.sort
    if isinstance(node, Const):
        return node.sort
    if isinstance(node, Not):
        _expect(node.arg, BOOL, "Not")
        return BOOL
    if isinstance(node, (And, Or)):
        for a in node.args:
            _expect(a, BOOL, type(node).__name__)
        return BOOL
    if isinstance(node, Implies):
        _expect(node.left, BOOL, "Implies")
        _expect(node.right, BOOL, "Implies")
        return BOOL
    if isinstance(node, (Lt, Le, Gt, Ge)):
        _expect_numeric(node.left)
        _expect_numeric(node.right)
        return BOOL
    if isinstance(node, (Eq, Ne)):
        ls, rs = sort_of(node.left), sort_of(node.right)
        if (ls == BOOL) != (rs == BOOL):
            raise SortError(f"equality between {ls} and {rs}")
        return BOOL
    if isinstance(node, Add):
        for a in node.args:
            _expect_numeric(a)
        return REAL if any(sort_of(a) == REAL for a in node.args) else INT
    if isinstance(node, (Sub, Mul)):
        _expect_numeric(node.left)
        _expect_numeric(node.right)
        return REAL if REAL in (sort_of(node.left), sort_of(node.right)) else INT
    raise SortError(f"not a formula/term: {node!r}")


def _expect(node, sort: str, ctx: str) -> None:
    got = sort_of(node)
    if got != sort:
        raise SortError(f"{ctx} expects {sort}, got {got}")


def _expect_numeric(node) -> None:
    got = sort_of(node)
    if got not in _NUMERIC:
        raise SortError(f"expected numeric term, got {got}")


def variables_of(node) -> set[Variable]:
    out: set[Variable] = set()

    def walk(n):
        if isinstance(n, Variable):
            out.add(n)
        elif isinstance(n, (Not,)):
            walk(n.arg)
        elif isinstance(n, (And, Or, Add)):
            for a in n.args:
                walk(a)
        elif isinstance(n, (Implies, Eq, Ne, Lt, Le, Gt, Ge, Sub, Mul)):
            walk(n.left)
            walk(n.right)
        elif isinstance(n, Const):
            pass
        else:
            raise SortError(f"not a formula/term: {n!r}")

    walk(node)
    return out


def is_nonlinear(node) -> bool:
    """True if any product multiplies two non-constant subterms."""

    def has_var(n) -> bool:
        return bool(variables_of(n))

    def walk(n) -> bool:
        if isinstance(n, Mul):
            if has_var(n.left) and has_var(n.right):
                return True
            return walk(n.left) or walk(n.right)
        if isinstance(n, (Not,)):
            return walk(n.arg)
        if isinstance(n, (And, Or, Add)):
            return any(walk(a) for a in n.args)
        if isinstance(n, (Implies, Eq, Ne, Lt, Le, Gt, Ge, Sub)):
            return walk(n.left) or walk(n.right)
        return False

    return walk(node)


# --------------------------------------------------------------------------
# Assignments and evaluation
# --------------------------------------------------------------------------


class Assignment:
    """A total map from variables to scalar values of matching sort."""

    __slots__ = ("values", "_hash")

    def __init__(self, values: Mapping[Variable, Union[bool, int, float, Fraction]]):
        self.values = dict(values)
        self._hash = hash(frozenset(self.values.items()))

    def __getitem__(self, var: Variable):
        try:
            return self.values[var]
        except KeyError:
            raise MissingVariable(var.name) from None

    def get(self, var: Variable, default=None):
        return self.values.get(var, default)

    def eval(self, node):
        return eval_node(node, self)

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return self.values == other.values

    def __hash__(self):
        return self._hash

    def __repr__(self):
        inner = ", ".join(
            f"{v.name}={val!r}" for v, val in sorted(self.values.items(), key=lambda kv: kv[0].name)
        )
        return f"Assignment({inner})"


def eval_node(node, a: Assignment):
    """Evaluate a term or formula under a (total) assignment."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Variable):
        return a[node]
    if isinstance(node, Not):
        return not eval_node(node.arg, a)
    if isinstance(node, And):
        return all(eval_node(x, a) for x in node.args)
    if isinstance(node, Or):
        return any(eval_node(x, a) for x in node.args)
    if isinstance(node, Implies):
        return (not eval_node(node.left, a)) or eval_node(node.right, a)
    if isinstance(node, Eq):
        return eval_node(node.left, a) == eval_node(node.right, a)
    if isinstance(node, Ne):
        return eval_node(node.left, a) != eval_node(node.right, a)
    if isinstance(node, Lt):
        return eval_node(node.left, a) < eval_node(node.right, a)
    if isinstance(node, Le):
        return eval_node(node.left, a) <= eval_node(node.right, a)
    if isinstance(node, Gt):
        return eval_node(node.left, a) > eval_node(node.right, a)
    if isinstance(node, Ge):
        return eval_node(node.left, a) >= eval_node(node.right, a)
    if isinstance(node, Add):
        return sum(eval_node(x, a) for x in node.args)
    if isinstance(node, Sub):
        return eval_node(node.left, a) - eval_node(node.right, a)
    if isinstance(node, Mul):
        return eval_node(node.left, a) * eval_node(node.right, a)
    raise SortError(f"not a formula/term: {node!r}")


def eval_formula(f, a: Assignment) -> bool:
    """Standard boolean semantics; raises MissingVariable on gaps."""
    result = eval_node(f, a)
    if not isinstance(result, bool):
        raise SortError("eval_formula applied to a non-boolean expression")
    return result
