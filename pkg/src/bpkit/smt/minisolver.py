"""A small SMT-LIB2 solver for the quantifier-free fragment this package emits.

Reads a script on stdin (declare-const / assert / check-sat / get-value)
and answers sat with a model, unsat, or unknown.  Booleans and bounded
integers are solved by depth-first search with partial-evaluation
pruning; real-valued queries are solved by seeded rejection sampling
over a box derived from the constraints.  Installed as the
`bpk-minismt` console script so a conforming SMT-LIB2 solver is always
available on PATH.

This is a fallback for environments without z3/cvc5, not a general
solver: unbounded integer queries and mixed int/real queries are
answered `unknown`.
"""

from __future__ import annotations

import math
import random
import sys
from fractions import Fraction

from . import formula as F
from .smtlib import parse_sexprs

DFS_NODE_CAP = 5_000_000
INT_RANGE_CAP = 1_000_000
SAMPLE_TRIES = 200_000


class Unsupported(Exception):
    pass


# --------------------------------------------------------------------------
# Script -> formula
# --------------------------------------------------------------------------

_REL = {"<": F.Lt, "<=": F.Le, ">": F.Gt, ">=": F.Ge}


def _build(sexpr, env: dict[str, F.Variable]):
    if isinstance(sexpr, str):
        if sexpr == "true":
            return F.TRUE
        if sexpr == "false":
            return F.FALSE
        if sexpr in env:
            return env[sexpr]
        try:
            if "." in sexpr:
                return F.Const(float(Fraction(sexpr)))
            return F.Const(int(sexpr))
        except ValueError:
            raise Unsupported(f"unknown symbol {sexpr!r}")
    head, *args = sexpr
    sub = [_build(a, env) for a in args]
    if head == "not":
        return F.Not(sub[0])
    if head == "and":
        return F.And(sub)
    if head == "or":
        return F.Or(sub)
    if head == "=>":
        out = sub[-1]
        for a in reversed(sub[:-1]):
            out = F.Implies(a, out)
        return out
    if head == "=":
        out = [F.Eq(sub[i], sub[i + 1]) for i in range(len(sub) - 1)]
        return out[0] if len(out) == 1 else F.And(out)
    if head in _REL:
        rel = _REL[head]
        out = [rel(sub[i], sub[i + 1]) for i in range(len(sub) - 1)]
        return out[0] if len(out) == 1 else F.And(out)
    if head == "+":
        return F.Add(sub)
    if head == "-":
        if len(sub) == 1:
            return F.Sub(F.Const(0), sub[0])
        out = sub[0]
        for a in sub[1:]:
            out = F.Sub(out, a)
        return out
    if head == "*":
        out = sub[0]
        for a in sub[1:]:
            out = F.Mul(out, a)
        return out
    if head == "/":
        if all(isinstance(a, F.Const) for a in sub):
            v = Fraction(sub[0].value)
            for a in sub[1:]:
                v /= Fraction(a.value)
            return F.Const(float(v))
        raise Unsupported("non-constant division")
    if head == "ite":
        c, t, e = sub
        if F.sort_of(t) == F.BOOL:
            return F.And([F.Implies(c, t), F.Implies(F.Not(c), e)])
        raise Unsupported("numeric ite")
    raise Unsupported(f"operator {head!r}")


# --------------------------------------------------------------------------
# Normalization and domain derivation
# --------------------------------------------------------------------------

_FLIP = {F.Lt: F.Ge, F.Le: F.Gt, F.Gt: F.Le, F.Ge: F.Lt, F.Eq: F.Ne, F.Ne: F.Eq}


def nnf(node, negate: bool = False):
    if isinstance(node, F.Not):
        return nnf(node.arg, not negate)
    if isinstance(node, F.And):
        parts = [nnf(a, negate) for a in node.args]
        return F.Or(parts) if negate else F.And(parts)
    if isinstance(node, F.Or):
        parts = [nnf(a, negate) for a in node.args]
        return F.And(parts) if negate else F.Or(parts)
    if isinstance(node, F.Implies):
        if negate:
            return F.And([nnf(node.left), nnf(node.right, True)])
        return F.Or([nnf(node.left, True), nnf(node.right)])
    if isinstance(node, (F.Lt, F.Le, F.Gt, F.Ge, F.Eq, F.Ne)):
        if negate:
            left_sort = F.sort_of(node.left)
            if isinstance(node, (F.Eq, F.Ne)) and left_sort == F.BOOL:
                return F.Not(node)
            return _FLIP[type(node)](node.left, node.right)
        return node
    if isinstance(node, F.Const):
        return F.Const(not node.value) if negate else node
    if isinstance(node, F.Variable):
        return F.Not(node) if negate else node
    raise Unsupported(f"cannot normalize {node!r}")


def top_conjuncts(node) -> list:
    if isinstance(node, F.And):
        out = []
        for a in node.args:
            out.extend(top_conjuncts(a))
        return out
    return [node]


def linear_form(term):
    """Return (coeffs: {var: num}, const) for a linear term, or None."""
    if isinstance(term, F.Const):
        if isinstance(term.value, bool):
            return None
        return {}, term.value
    if isinstance(term, F.Variable):
        if term.sort == F.BOOL:
            return None
        return {term: 1}, 0
    if isinstance(term, F.Add):
        coeffs: dict = {}
        const = 0
        for a in term.args:
            lf = linear_form(a)
            if lf is None:
                return None
            c, k = lf
            for v, x in c.items():
                coeffs[v] = coeffs.get(v, 0) + x
            const += k
        return coeffs, const
    if isinstance(term, F.Sub):
        l = linear_form(term.left)
        r = linear_form(term.right)
        if l is None or r is None:
            return None
        coeffs = dict(l[0])
        for v, x in r[0].items():
            coeffs[v] = coeffs.get(v, 0) - x
        return coeffs, l[1] - r[1]
    if isinstance(term, F.Mul):
        l = linear_form(term.left)
        r = linear_form(term.right)
        if l is None or r is None:
            return None
        if not l[0]:
            scale = l[1]
            coeffs = {v: scale * x for v, x in r[0].items()}
            return coeffs, scale * r[1]
        if not r[0]:
            scale = r[1]
            coeffs = {v: scale * x for v, x in l[0].items()}
            return coeffs, scale * l[1]
        return None
    return None


class Domain:
    __slots__ = ("lo", "hi", "candidates")

    def __init__(self):
        self.lo = None
        self.hi = None
        self.candidates: set = set()

    def tighten_lo(self, v):
        if self.lo is None or v > self.lo:
            self.lo = v

    def tighten_hi(self, v):
        if self.hi is None or v < self.hi:
            self.hi = v


def collect_linear_atoms(query, domains) -> list[tuple[dict, object, bool]]:
    """Top-level linear atoms normalized to "sum(coef*var) + const <= 0".

    Eq contributes both directions; strictness is remembered per atom.
    """
    linear_atoms: list[tuple[dict, object, bool]] = []
    for c in top_conjuncts(nnf(query)):
        if not isinstance(c, (F.Lt, F.Le, F.Gt, F.Ge, F.Eq)):
            continue
        lf = linear_form(F.Sub(c.left, c.right))
        if lf is None or not lf[0]:
            continue
        coeffs, const = lf
        if any(v not in domains for v in coeffs):
            continue
        strict = isinstance(c, (F.Lt, F.Gt))
        if isinstance(c, (F.Le, F.Lt, F.Eq)):
            linear_atoms.append((coeffs, const, strict))
        if isinstance(c, (F.Ge, F.Gt, F.Eq)):
            linear_atoms.append(
                ({v: -k for v, k in coeffs.items()}, -const, strict)
            )
    return linear_atoms


def derive_domains(query, variables) -> dict[F.Variable, Domain]:
    domains = {v: Domain() for v in variables if v.sort != F.BOOL}
    conjuncts = top_conjuncts(nnf(query))
    linear_atoms = collect_linear_atoms(query, domains)

    # interval propagation: from sum(c_i * x_i) + k <= 0 derive, for each
    # x_j, the bound c_j*x_j <= -k - min(sum of the other terms)
    for _ in range(50):
        changed = False
        for coeffs, const, strict in linear_atoms:
            for var, coef in coeffs.items():
                rest_min = 0
                feasible = True
                for other, oc in coeffs.items():
                    if other is var:
                        continue
                    d = domains[other]
                    src = d.lo if oc > 0 else d.hi
                    if src is None:
                        feasible = False
                        break
                    rest_min += oc * src
                if not feasible:
                    continue
                val = Fraction(-const - rest_min) / Fraction(coef)
                if coef > 0:
                    if var.sort == F.INT:
                        b = int(val) - 1 if strict and val.denominator == 1 else math.floor(val)
                    else:
                        b = float(val)
                    if domains[var].hi is None or b < domains[var].hi:
                        domains[var].tighten_hi(b)
                        changed = True
                else:
                    if var.sort == F.INT:
                        b = int(val) + 1 if strict and val.denominator == 1 else math.ceil(val)
                    else:
                        b = float(val)
                    if domains[var].lo is None or b > domains[var].lo:
                        domains[var].tighten_lo(b)
                        changed = True
        if not changed:
            break

    for c in conjuncts:
        # sum-of-squares box rule: (x*x + y*y + ...) <= c
        if isinstance(c, (F.Le, F.Lt)) and isinstance(c.right, F.Const):
            bound = c.right.value
            if isinstance(bound, bool) or bound < 0:
                continue
            terms = c.left.args if isinstance(c.left, F.Add) else (c.left,)
            squared = []
            ok = True
            for t in terms:
                if (
                    isinstance(t, F.Mul)
                    and isinstance(t.left, F.Variable)
                    and t.left == t.right
                ):
                    squared.append(t.left)
                elif isinstance(t, F.Const) and not isinstance(t.value, bool) and t.value >= 0:
                    pass
                else:
                    ok = False
                    break
            if ok and squared:
                r = math.sqrt(float(bound))
                for v in squared:
                    if v in domains:
                        domains[v].tighten_lo(-r)
                        domains[v].tighten_hi(r)

    # candidate values from equality atoms anywhere in the formula
    def collect(n):
        if isinstance(n, F.Eq):
            lf = linear_form(F.Sub(n.left, n.right)) if F.sort_of(n.left) != F.BOOL else None
            if lf is not None and len(lf[0]) == 1:
                (var, coef), = lf[0].items()
                if coef != 0 and var in domains:
                    val = Fraction(-lf[1]) / Fraction(coef)
                    if var.sort == F.INT:
                        if val.denominator == 1:
                            domains[var].candidates.add(int(val))
                    else:
                        domains[var].candidates.add(float(val))
        if isinstance(n, (F.And, F.Or, F.Add)):
            for a in n.args:
                collect(a)
        elif isinstance(n, (F.Not,)):
            collect(n.arg)
        elif isinstance(n, (F.Implies, F.Eq, F.Ne, F.Lt, F.Le, F.Gt, F.Ge, F.Sub, F.Mul)):
            collect(n.left)
            collect(n.right)

    collect(query)
    return domains


# --------------------------------------------------------------------------
# Three-valued partial evaluation
# --------------------------------------------------------------------------

_UNKNOWN = object()


def eval3(node, env: dict):
    if isinstance(node, F.Const):
        return node.value
    if isinstance(node, F.Variable):
        return env.get(node, _UNKNOWN)
    if isinstance(node, F.Not):
        v = eval3(node.arg, env)
        return _UNKNOWN if v is _UNKNOWN else not v
    if isinstance(node, F.And):
        unknown = False
        for a in node.args:
            v = eval3(a, env)
            if v is False:
                return False
            if v is _UNKNOWN:
                unknown = True
        return _UNKNOWN if unknown else True
    if isinstance(node, F.Or):
        unknown = False
        for a in node.args:
            v = eval3(a, env)
            if v is True:
                return True
            if v is _UNKNOWN:
                unknown = True
        return _UNKNOWN if unknown else False
    if isinstance(node, F.Implies):
        l = eval3(node.left, env)
        if l is False:
            return True
        r = eval3(node.right, env)
        if r is True:
            return True
        if l is _UNKNOWN or r is _UNKNOWN:
            return _UNKNOWN
        return r
    ops = {
        F.Eq: lambda a, b: a == b,
        F.Ne: lambda a, b: a != b,
        F.Lt: lambda a, b: a < b,
        F.Le: lambda a, b: a <= b,
        F.Gt: lambda a, b: a > b,
        F.Ge: lambda a, b: a >= b,
        F.Sub: lambda a, b: a - b,
        F.Mul: lambda a, b: a * b,
    }
    if type(node) in ops:
        l = eval3(node.left, env)
        if l is _UNKNOWN:
            return _UNKNOWN
        r = eval3(node.right, env)
        if r is _UNKNOWN:
            return _UNKNOWN
        return ops[type(node)](l, r)
    if isinstance(node, F.Add):
        total = 0
        for a in node.args:
            v = eval3(a, env)
            if v is _UNKNOWN:
                return _UNKNOWN
            total += v
        return total
    raise Unsupported(f"cannot evaluate {node!r}")


# --------------------------------------------------------------------------
# Search
# --------------------------------------------------------------------------


def _dfs(query, variables, domains):
    """Backtracking search over finite domains; returns model dict or None."""
    order = list(variables)
    values: dict = {}
    budget = [DFS_NODE_CAP]
    # forward bound checks over top-level linear atoms: a partial
    # assignment is abandoned as soon as some atom cannot reach <= 0
    # even with every unassigned variable at its best bound
    linear_atoms = [
        (tuple(coeffs.items()), const, strict)
        for coeffs, const, strict in collect_linear_atoms(query, domains)
    ]

    def bounds_feasible() -> bool:
        for coeffs, const, strict in linear_atoms:
            total = const
            known = True
            for var, coef in coeffs:
                if var in values:
                    total += coef * values[var]
                else:
                    d = domains[var]
                    b = d.lo if coef > 0 else d.hi
                    if b is None:
                        known = False
                        break
                    total += coef * b
            if not known:
                continue
            if total > 0 or (strict and total == 0):
                return False
        return True

    domain_lists = []
    for v in order:
        if v.sort == F.BOOL:
            domain_lists.append([False, True])
        else:
            d = domains[v]
            if d.lo is not None and d.hi is not None:
                if d.hi - d.lo > INT_RANGE_CAP:
                    raise Unsupported(f"domain of {v.name} too wide")
                cand = list(range(int(d.lo), int(d.hi) + 1))
                extra = sorted(
                    c for c in d.candidates if d.lo <= c <= d.hi and c not in set(cand)
                )
                domain_lists.append(cand + extra)
            elif d.candidates:
                cand = sorted(d.candidates)
                if d.lo is not None:
                    cand = [c for c in cand if c >= d.lo]
                if d.hi is not None:
                    cand = [c for c in cand if c <= d.hi]
                domain_lists.append(cand)
            else:
                raise Unsupported(f"cannot bound integer variable {v.name}")

    def rec(i: int):
        budget[0] -= 1
        if budget[0] < 0:
            raise Unsupported("search budget exhausted")
        v = eval3(query, values)
        if v is False:
            return None
        if not bounds_feasible():
            return None
        if i == len(order):
            return dict(values) if v is True else None
        var = order[i]
        for val in domain_lists[i]:
            values[var] = val
            out = rec(i + 1)
            if out is not None:
                return out
            del values[var]
        return None

    return rec(0)


def _sample_reals(query, variables, domains, seed: int):
    rng = random.Random(seed)
    boxes = []
    for v in variables:
        if v.sort != F.REAL:
            raise Unsupported("mixed real/non-real query")
        d = domains[v]
        lo = d.lo if d.lo is not None else -1e6
        hi = d.hi if d.hi is not None else 1e6
        boxes.append((lo, hi))
    for _ in range(SAMPLE_TRIES):
        env = {v: rng.uniform(lo, hi) for v, (lo, hi) in zip(variables, boxes)}
        if eval3(query, env) is True:
            return env
    return None


def solve_formula(query, variables, seed: int = 0):
    """Returns ('sat', model-dict), ('unsat', None), or ('unknown', None)."""
    variables = list(variables)
    try:
        domains = derive_domains(query, variables)
        if any(v.sort == F.REAL for v in variables):
            model = _sample_reals(query, variables, domains, seed)
            # sampling cannot prove unsatisfiability
            return ("sat", model) if model is not None else ("unknown", None)
        model = _dfs(query, variables, domains)
        return ("sat", model) if model is not None else ("unsat", None)
    except Unsupported:
        return ("unknown", None)


# --------------------------------------------------------------------------
# Script driver
# --------------------------------------------------------------------------


def _render_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value) if value >= 0 else f"(- {-value})"
    v = float(value)
    if v < 0:
        return f"(- {-v!r})"
    return repr(v)


def solve_script(text: str) -> str:
    """Execute an SMT-LIB2 script and return the response text."""
    env: dict[str, F.Variable] = {}
    asserts = []
    seed = 0
    out_lines = []
    last_status = None
    for form in parse_sexprs(text):
        if not isinstance(form, list) or not form:
            continue
        head = form[0]
        if head == "set-option" and len(form) == 3 and form[1] == ":random-seed":
            seed = int(form[2])
        elif head == "set-logic":
            pass
        elif head == "declare-const":
            name, sort = form[1], form[2]
            if sort not in (F.BOOL, F.INT, F.REAL):
                out_lines.append(f"(error \"unsupported sort {sort}\")")
                return "\n".join(out_lines) + "\n"
            env[name] = F.Variable(name, sort)
        elif head == "declare-fun" and len(form) == 4 and form[2] == []:
            env[form[1]] = F.Variable(form[1], form[3])
        elif head == "assert":
            try:
                asserts.append(_build(form[1], env))
            except Unsupported as exc:
                out_lines.append(f"(error \"{exc}\")")
                return "\n".join(out_lines) + "\n"
        elif head == "check-sat":
            query = F.conj(asserts)
            status, model = solve_formula(query, list(env.values()), seed)
            last_status = (status, model)
            out_lines.append(status)
        elif head == "get-value":
            if last_status is None or last_status[0] != "sat":
                out_lines.append('(error "no model available")')
            else:
                model = last_status[1]
                pairs = []
                for name in form[1]:
                    var = env[name]
                    pairs.append(f"({name} {_render_value(model[var])})")
                out_lines.append("(" + " ".join(pairs) + ")")
        elif head == "exit":
            break
    return "\n".join(out_lines) + "\n"


def main() -> int:
    text = sys.stdin.read()
    sys.stdout.write(solve_script(text))
    return 0


if __name__ == "__main__":
    sys.exit(main())
