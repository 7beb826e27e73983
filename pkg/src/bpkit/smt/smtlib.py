"""SMT-LIB2 emission and response parsing.

Queries are rendered as full scripts (declarations, a single assert,
check-sat, get-value).  The logic header is picked from the sorts in
use: QF_LIA for integers, QF_LRA for linear reals, QF_NRA/QF_NIA when a
product of non-constant terms appears; pure-boolean queries carry no
set-logic line, which every mainstream solver accepts.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from . import formula as F


class ParseError(ValueError):
    pass


# --------------------------------------------------------------------------
# Emission
# --------------------------------------------------------------------------


def _render_number(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value) if value >= 0 else f"(- {-value})"
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return _render_number(int(value))
        s = f"(/ {abs(value.numerator)} {value.denominator})"
        return s if value >= 0 else f"(- {s})"
    # float: render with enough digits to round-trip
    if value < 0:
        return f"(- {_render_number(-value)})"
    text = repr(float(value))
    if "e" in text or "E" in text:
        text = f"{float(value):.17f}"
    if "." not in text:
        text += ".0"
    return text


def render(node) -> str:
    """Render a term/formula as an SMT-LIB2 s-expression."""
    if isinstance(node, F.Const):
        return _render_number(node.value)
    if isinstance(node, F.Variable):
        return node.name
    if isinstance(node, F.Not):
        return f"(not {render(node.arg)})"
    if isinstance(node, F.And):
        if not node.args:
            return "true"
        return "(and " + " ".join(render(a) for a in node.args) + ")"
    if isinstance(node, F.Or):
        if not node.args:
            return "false"
        return "(or " + " ".join(render(a) for a in node.args) + ")"
    if isinstance(node, F.Implies):
        return f"(=> {render(node.left)} {render(node.right)})"
    if isinstance(node, F.Eq):
        return f"(= {render(node.left)} {render(node.right)})"
    if isinstance(node, F.Ne):
        return f"(not (= {render(node.left)} {render(node.right)}))"
    if isinstance(node, F.Lt):
        return f"(< {render(node.left)} {render(node.right)})"
    if isinstance(node, F.Le):
        return f"(<= {render(node.left)} {render(node.right)})"
    if isinstance(node, F.Gt):
        return f"(> {render(node.left)} {render(node.right)})"
    if isinstance(node, F.Ge):
        return f"(>= {render(node.left)} {render(node.right)})"
    if isinstance(node, F.Add):
        if len(node.args) == 1:
            return render(node.args[0])
        return "(+ " + " ".join(render(a) for a in node.args) + ")"
    if isinstance(node, F.Sub):
        return f"(- {render(node.left)} {render(node.right)})"
    if isinstance(node, F.Mul):
        return f"(* {render(node.left)} {render(node.right)})"
    raise F.SortError(f"cannot render {node!r}")


def choose_logic(variables: Iterable[F.Variable], query) -> str | None:
    sorts = {v.sort for v in variables}
    nonlinear = F.is_nonlinear(query)
    if F.REAL in sorts and F.INT in sorts:
        return "QF_NIRA" if nonlinear else "QF_LIRA"
    if F.REAL in sorts:
        return "QF_NRA" if nonlinear else "QF_LRA"
    if F.INT in sorts:
        return "QF_NIA" if nonlinear else "QF_LIA"
    return None  # pure boolean


def emit_smtlib(
    variables: Sequence[F.Variable],
    query,
    seed: int | None = None,
) -> str:
    """Emit a complete SMT-LIB2 script for one satisfiability query."""
    F.sort_of(query)  # raises SortError on ill-sorted input
    variables = sorted(set(variables), key=lambda v: v.name)
    lines = []
    if seed is not None:
        lines.append(f"(set-option :random-seed {seed})")
    logic = choose_logic(variables, query)
    if logic is not None:
        lines.append(f"(set-logic {logic})")
    for v in variables:
        lines.append(f"(declare-const {v.name} {v.sort})")
    lines.append(f"(assert {render(query)})")
    lines.append("(check-sat)")
    if variables:
        lines.append("(get-value (" + " ".join(v.name for v in variables) + "))")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# S-expression parsing (solver responses and the bundled solver's input)
# --------------------------------------------------------------------------


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in "()":
            tokens.append(c)
            i += 1
        elif c.isspace():
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c == "|":
            j = text.index("|", i + 1)
            tokens.append(text[i : j + 1])
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            tokens.append(text[i:j])
            i = j
    return tokens


def parse_sexprs(text: str):
    """Parse all top-level s-expressions in `text`."""
    tokens = tokenize(text)
    pos = 0

    def parse_one():
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while pos < len(tokens) and tokens[pos] != ")":
                items.append(parse_one())
            if pos >= len(tokens):
                raise ParseError("unbalanced parentheses")
            pos += 1
            return items
        if tok == ")":
            raise ParseError("unexpected ')'")
        return tok

    out = []
    while pos < len(tokens):
        out.append(parse_one())
    return out


def value_from_sexpr(sexpr, sort: str):
    """Decode a get-value result term into a Python scalar."""

    def decode(s):
        if isinstance(s, list):
            if len(s) == 2 and s[0] == "-":
                return -decode(s[1])
            if len(s) == 3 and s[0] == "/":
                return Fraction(decode(s[1])) / Fraction(decode(s[2]))
            if len(s) == 3 and s[0] in ("+", "*"):
                a, b = decode(s[1]), decode(s[2])
                return a + b if s[0] == "+" else a * b
            raise ParseError(f"cannot decode value {s!r}")
        if s == "true":
            return True
        if s == "false":
            return False
        try:
            if "." in s:
                return Fraction(s)
            return int(s)
        except ValueError as exc:
            raise ParseError(f"cannot decode value {s!r}") from exc

    v = decode(sexpr)
    if sort == F.BOOL:
        if not isinstance(v, bool):
            raise ParseError(f"expected boolean, got {v!r}")
        return v
    if sort == F.INT:
        if isinstance(v, bool) or not isinstance(v, (int, Fraction)):
            raise ParseError(f"expected integer, got {v!r}")
        if isinstance(v, Fraction):
            if v.denominator != 1:
                raise ParseError(f"expected integer, got {v!r}")
            v = v.numerator
        return v
    if isinstance(v, bool):
        raise ParseError(f"expected real, got {v!r}")
    return float(v)


def parse_model(
    text: str, variables: Sequence[F.Variable]
) -> F.Assignment:
    """Parse a get-value response into an assignment over `variables`."""
    sexprs = parse_sexprs(text)
    if not sexprs:
        raise ParseError("empty get-value response")
    pairs = sexprs[0]
    if not isinstance(pairs, list):
        raise ParseError(f"malformed get-value response: {text!r}")
    by_name = {v.name: v for v in variables}
    values = {}
    for entry in pairs:
        if not (isinstance(entry, list) and len(entry) == 2 and isinstance(entry[0], str)):
            raise ParseError(f"malformed get-value entry: {entry!r}")
        name, raw = entry
        if name not in by_name:
            continue
        var = by_name[name]
        values[var] = value_from_sexpr(raw, var.sort)
    missing = [v.name for v in variables if v not in values]
    if missing:
        raise ParseError(f"solver response missing values for {missing}")
    return F.Assignment(values)
