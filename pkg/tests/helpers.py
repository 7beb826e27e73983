"""Independent oracles used by the test suite.

- SmvModel: parses and interprets the emitted SMV subset (modules with
  state counters, case-assigned booleans, DEFINE formulas, and a TRANS
  constraint) as a transition relation over event sequences.
- PrismModel: parses and interprets the emitted PRISM subset (formulas,
  modules with labeled/unlabeled guarded commands) as an MDP with
  synchronized labels.
- scheduler_enumeration_probability: brute-force max/min reachability on
  a ProductGraph by enumerating deterministic memoryless schedulers and
  solving each induced Markov chain exactly.

These re-derive semantics from the emitted text / graph structure on
purpose; they share no code with the emitters they check.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

# --------------------------------------------------------------------------
# Tiny boolean-expression evaluator (shared by both interpreters)
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(->|!=|[()&|!=]|next\(event\)|[A-Za-z_][A-Za-z0-9_.]*|-?\d+)"
)


def tokenize_expr(text: str) -> list[str]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ValueError(f"cannot tokenize {text[pos:pos+20]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


class ExprParser:
    """Pratt parser for !, =, !=, &, |, -> over atoms resolved by `lookup`."""

    def __init__(self, tokens: list[str], lookup):
        self.tokens = tokens
        self.pos = 0
        self.lookup = lookup

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def parse(self):
        value = self.parse_implies()
        if self.peek() is not None:
            raise ValueError(f"trailing tokens {self.tokens[self.pos:]}")
        return value

    def parse_implies(self):
        left = self.parse_or()
        if self.peek() == "->":
            self.next()
            right = self.parse_implies()
            return (not left) or right
        return left

    def parse_or(self):
        value = self.parse_and()
        while self.peek() == "|":
            self.next()
            value = self.parse_and() or value
        return value

    def parse_and(self):
        value = self.parse_cmp()
        while self.peek() == "&":
            self.next()
            value = self.parse_cmp() and value
        return value

    def parse_cmp(self):
        left = self.parse_unary()
        if self.peek() in ("=", "!="):
            op = self.next()
            right = self.parse_unary()
            return (left == right) if op == "=" else (left != right)
        return left

    def parse_unary(self):
        tok = self.peek()
        if tok == "!":
            self.next()
            return not self.parse_unary()
        if tok == "(":
            self.next()
            value = self.parse_implies()
            if self.next() != ")":
                raise ValueError("unbalanced parenthesis")
            return value
        self.next()
        if tok == "TRUE" or tok == "true":
            return True
        if tok == "FALSE" or tok == "false":
            return False
        if re.fullmatch(r"-?\d+", tok):
            return int(tok)
        return self.lookup(tok)


def eval_expr(text: str, lookup):
    return ExprParser(tokenize_expr(text), lookup).parse()


# --------------------------------------------------------------------------
# SMV interpreter
# --------------------------------------------------------------------------


@dataclass
class SmvModule:
    name: str
    state_max: int
    bool_assigns: dict  # var name -> list of (cond text, value bool)
    next_arms: list  # (cond text, target int or "state")


@dataclass
class SmvMain:
    event_values: list[str]
    instances: list[tuple[str, str]]  # (instance name, module name)
    defines: dict  # name -> expr text
    trans: str


def _split_cases(body: str) -> list[tuple[str, str]]:
    arms = []
    for line in body.strip().splitlines():
        line = line.strip()
        if not line or line in ("case", "esac;"):
            continue
        cond, _, value = line.partition(":")
        arms.append((cond.strip(), value.strip().rstrip(";")))
    return arms


def parse_smv(text: str) -> tuple[dict[str, SmvModule], SmvMain]:
    chunks = re.split(r"(?m)^MODULE ", text)
    modules: dict[str, SmvModule] = {}
    main: SmvMain | None = None
    for chunk in chunks:
        if not chunk.strip():
            continue
        header, _, body = chunk.partition("\n")
        name = header.split("(")[0].strip()
        if name == "main":
            event_m = re.search(r"event:\s*\{([^}]*)\};", body)
            event_values = [v.strip() for v in event_m.group(1).split(",")]
            instances = re.findall(r"(\w+):\s*(\w+)\(event\);", body)
            defines = {}
            for dm in re.finditer(r"^\s*(\w+)\s*:=\s*(.+);$", body, re.M):
                if dm.group(1) != "event":
                    defines[dm.group(1)] = dm.group(2)
            trans_m = re.search(r"TRANS\n\s*(.+)", body)
            main = SmvMain(event_values, instances, defines, trans_m.group(1).strip())
            continue
        sm = re.search(r"state:\s*0\s*\.\.\s*(\d+);", body)
        state_max = int(sm.group(1))
        bool_assigns = {}
        next_arms = None
        for am in re.finditer(
            r"^\s*(next\(state\)|[\w]+)\s*:=\s*\n\s*case\n(.*?)\n\s*esac;",
            body,
            re.S | re.M,
        ):
            var, arms_text = am.group(1), am.group(2)
            arms = _split_cases(arms_text)
            if var == "next(state)":
                next_arms = [
                    (cond, value if value == "state" else int(value))
                    for cond, value in arms
                ]
            else:
                bool_assigns[var] = [
                    (cond, value == "TRUE") for cond, value in arms
                ]
        modules[name] = SmvModule(name, state_max, bool_assigns, next_arms or [])
    assert main is not None, "no main module"
    return modules, main


class SmvModel:
    """Interprets the emitted SMV text as (event, thread states) transitions."""

    def __init__(self, text: str):
        self.modules, self.main = parse_smv(text)

    def initial(self):
        return (self.main.event_values[0], tuple(0 for _ in self.main.instances))

    def _module_bools(self, inst_idx: int, state: int) -> dict[str, bool]:
        _, mod_name = self.main.instances[inst_idx]
        mod = self.modules[mod_name]
        out = {}
        for var, arms in mod.bool_assigns.items():
            for cond, value in arms:
                if eval_expr(cond, lambda t, s=state: s if t == "state" else t):
                    out[var] = value
                    break
        return out

    def _defines(self, states) -> dict[str, bool]:
        per_instance = [
            self._module_bools(i, s) for i, s in enumerate(states)
        ]
        values: dict[str, bool] = {}

        def lookup(tok: str):
            if "." in tok:
                inst, var = tok.split(".", 1)
                idx = next(
                    i for i, (n, _) in enumerate(self.main.instances) if n == inst
                )
                return per_instance[idx].get(var, False)
            if tok in values:
                return values[tok]
            if tok in self.main.defines:
                values[tok] = eval_expr(self.main.defines[tok], lookup)
                return values[tok]
            if tok in self.main.event_values:
                return tok
            raise KeyError(tok)

        for name in self.main.defines:
            lookup(name)
        return values

    def successors(self, config) -> dict[str, tuple]:
        """Map of permitted next(event) symbol -> successor configuration."""
        event, states = config
        defines = self._defines(states)

        out = {}
        for candidate in self.main.event_values:

            def lookup(tok: str, _c=candidate):
                if tok == "next(event)":
                    return _c
                if tok in defines:
                    return defines[tok]
                if tok == "event":
                    return event
                if tok in self.main.event_values:
                    return tok
                raise KeyError(tok)

            if not eval_expr(self.main.trans, lookup):
                continue
            next_states = []
            for i, s in enumerate(states):
                _, mod_name = self.main.instances[i]
                mod = self.modules[mod_name]
                target = s
                for cond, value in mod.next_arms:

                    def arm_lookup(tok: str, _c=candidate, _s=s):
                        if tok == "next(event)":
                            return _c
                        if tok == "state":
                            return _s
                        if tok in self.main.event_values:
                            return tok
                        raise KeyError(tok)

                    if eval_expr(cond, arm_lookup):
                        target = _s_value(value, s)
                        break
                next_states.append(target)
            out[candidate] = (candidate, tuple(next_states))
        return out


def _s_value(value, state):
    return state if value == "state" else value


# --------------------------------------------------------------------------
# PRISM interpreter
# --------------------------------------------------------------------------


@dataclass
class PrismCommand:
    label: str | None
    guard: str
    updates: list[tuple[float, dict[str, int]]]


@dataclass
class PrismModule:
    name: str
    var: str
    var_range: tuple[int, int]
    init: int
    commands: list[PrismCommand]


class PrismModel:
    """Interprets the emitted PRISM mdp text with synchronized labels."""

    def __init__(self, text: str):
        assert text.lstrip().startswith("mdp")
        self.formulas: dict[str, str] = {}
        for m in re.finditer(r"^formula (\w+) = (.+);$", text, re.M):
            self.formulas[m.group(1)] = m.group(2)
        self.modules: list[PrismModule] = []
        for m in re.finditer(r"^module (\w+)\n(.*?)^endmodule", text, re.S | re.M):
            name, body = m.group(1), m.group(2)
            vm = re.search(r"(\w+)\s*:\s*\[(-?\d+)\.\.(-?\d+)\]\s*init\s*(-?\d+);", body)
            var, lo, hi, init = (
                vm.group(1),
                int(vm.group(2)),
                int(vm.group(3)),
                int(vm.group(4)),
            )
            commands = []
            for cm in re.finditer(r"^\s*\[(\w*)\]\s*(.+?)\s*->\s*(.+?);$", body, re.M):
                label = cm.group(1) or None
                guard = cm.group(2)
                updates = []
                for upd in cm.group(3).split("+"):
                    pm = re.match(r"\s*([0-9.eE+-]+)\s*:\s*\((\w+)'=(-?\d+)\)\s*", upd)
                    updates.append(
                        (float(pm.group(1)), {pm.group(2): int(pm.group(3))})
                    )
                commands.append(PrismCommand(label, guard, updates))
            self.modules.append(PrismModule(name, var, (lo, hi), init, commands))
        self.labels = sorted(
            {c.label for mod in self.modules for c in mod.commands if c.label}
        )

    def initial(self) -> tuple[int, ...]:
        return tuple(mod.init for mod in self.modules)

    def _lookup_factory(self, state: tuple[int, ...]):
        var_values = {mod.var: v for mod, v in zip(self.modules, state)}
        cache: dict[str, object] = {}

        def lookup(tok: str):
            if tok in var_values:
                return var_values[tok]
            if tok in cache:
                return cache[tok]
            if tok in self.formulas:
                cache[tok] = eval_expr(self.formulas[tok], lookup)
                return cache[tok]
            raise KeyError(tok)

        return lookup

    def enabled_labels(self, state) -> list[str]:
        lookup = self._lookup_factory(state)
        out = []
        for label in self.labels:
            ok = True
            for mod in self.modules:
                cmds = [c for c in mod.commands if c.label == label]
                if not cmds:
                    continue
                if not any(eval_expr(c.guard, lookup) for c in cmds):
                    ok = False
                    break
            if ok:
                out.append(label)
        return out

    def fire_label(self, state, label: str) -> tuple[int, ...]:
        lookup = self._lookup_factory(state)
        new = {mod.var: v for mod, v in zip(self.modules, state)}
        for mod in self.modules:
            cmds = [
                c
                for c in mod.commands
                if c.label == label and eval_expr(c.guard, lookup)
            ]
            if not cmds:
                continue
            assert len(cmds) == 1, f"nondeterministic label {label} in {mod.name}"
            (p, assign), = cmds[0].updates
            assert p == 1
            new.update(assign)
        return tuple(new[mod.var] for mod in self.modules)

    def unlabeled_choices(self, state):
        """List of (module name, distribution {successor state: prob})."""
        lookup = self._lookup_factory(state)
        out = []
        for mod in self.modules:
            for c in mod.commands:
                if c.label is None and eval_expr(c.guard, lookup):
                    dist = {}
                    for p, assign in c.updates:
                        new = {m.var: v for m, v in zip(self.modules, state)}
                        new.update(assign)
                        succ = tuple(new[m.var] for m in self.modules)
                        dist[succ] = dist.get(succ, 0.0) + p
                    out.append((mod.name, dist))
        return out


# --------------------------------------------------------------------------
# Brute-force MDP oracle over a ProductGraph
# --------------------------------------------------------------------------


def _chain_probability(pg, target, decision: dict[int, object]) -> float:
    """Exact reach probability of the chain induced by a fixed scheduler."""
    n = len(pg.nodes)
    a = np.eye(n)
    b = np.zeros(n)
    for node in pg.nodes:
        i = node.index
        if node.kind == "done" or node.terminal is not None:
            continue  # value 0 (row stays v_i = 0)
        if node.prob_edges:
            for p, t, _ in node.prob_edges:
                a[i, t] -= p
        elif node.event_edges:
            e = decision[i]
            t = node.event_edges[e]
            if e in target:
                b[i] = 1.0
            else:
                a[i, t] -= 1.0
    return float(np.linalg.solve(a, b)[pg.start_index])


def scheduler_enumeration_probability(
    pg, target, mode: str = "max", max_schedulers: int = 1 << 14
) -> float:
    """Enumerate deterministic memoryless schedulers; exact linear solves."""
    target = set(target) if not hasattr(target, "__contains__") else target
    branch_nodes = [
        node
        for node in pg.nodes
        if node.kind == "sync"
        and node.terminal is None
        and len(node.event_edges) > 1
    ]
    option_lists = [sorted(node.event_edges, key=str) for node in branch_nodes]
    count = 1
    for opts in option_lists:
        count *= len(opts)
    if count > max_schedulers:
        raise ValueError(f"too many schedulers to enumerate ({count})")
    base = {
        node.index: next(iter(node.event_edges))
        for node in pg.nodes
        if node.kind == "sync" and node.event_edges
    }
    best = None
    for combo in itertools.product(*option_lists) if branch_nodes else [()]:
        decision = dict(base)
        for node, e in zip(branch_nodes, combo):
            decision[node.index] = e
        v = _chain_probability(pg, target, decision)
        if best is None:
            best = v
        best = max(best, v) if mode == "max" else min(best, v)
    return best if best is not None else 0.0


# --------------------------------------------------------------------------
# Lockstep structural comparison against a ProductGraph
# --------------------------------------------------------------------------


def compare_smv_with_product(pg, smv_text: str, event_ids) -> int:
    """Breadth-first bisimulation check; returns number of paired states.

    Asserts that from every reachable paired state the SMV TRANS relation
    permits exactly the product's enabled events (or only the done sink).
    """
    model = SmvModel(smv_text)
    start_sym = model.main.event_values[0]
    done_sym = model.main.event_values[1]
    ids = {e: event_ids[e] for e in pg.universe}

    start = (pg.start_index, model.initial())
    seen = {start}
    queue = [start]
    while queue:
        prod_idx, config = queue.pop(0)
        node = pg.nodes[prod_idx]
        # the SMV thread-state vector must mirror the product node's
        # (the event variable may differ: it records the last fired event)
        assert tuple(config[1]) == tuple(node.states), (
            f"node {prod_idx}: SMV states {config[1]} != product {node.states}"
        )
        succs = model.successors(config)
        assert start_sym not in succs, "START permitted after initialization"
        if node.kind != "sync" or node.terminal is not None or not node.event_edges:
            assert set(succs) == {done_sym}, (
                f"terminal product node {prod_idx} but SMV permits {set(succs)}"
            )
            continue
        expected = {ids[e] for e in node.event_edges}
        assert set(succs) == expected, (
            f"node {prod_idx}: SMV permits {set(succs)}, product has {expected}"
        )
        for e, target in node.event_edges.items():
            pair = (target, succs[ids[e]])
            if pair not in seen:
                seen.add(pair)
                queue.append(pair)
    return len(seen)


def compare_prism_with_product(pg, prism_text: str, event_ids) -> int:
    """Breadth-first MDP isomorphism check; returns number of paired states."""
    model = PrismModel(prism_text)
    ids = {e: event_ids[e] for e in pg.universe}

    # thread modules precede main; main's variable only records the last
    # fired event, so it is excluded from the state comparison
    n_threads = len(model.modules) - 1
    assert model.modules[n_threads].name == "main"

    start = (pg.start_index, model.initial())
    seen = {start}
    queue = [start]
    prism_to_prod: dict[tuple, int] = {}
    while queue:
        prod_idx, state = queue.pop(0)
        node = pg.nodes[prod_idx]
        if node.kind != "done":
            assert tuple(state[:n_threads]) == tuple(node.states), (
                f"node {prod_idx}: PRISM states {state[:n_threads]} != "
                f"product {node.states}"
            )
        if state in prism_to_prod:
            assert prism_to_prod[state] == prod_idx
        prism_to_prod[state] = prod_idx

        labels = model.enabled_labels(state)
        choices = model.unlabeled_choices(state)
        if node.kind == "choice":
            assert not labels, f"labels {labels} enabled at choice node {prod_idx}"
            assert len(choices) == 1, (
                f"expected one unlabeled command at node {prod_idx}, got {len(choices)}"
            )
            _, dist = choices[0]
            edges = node.prob_edges
            assert len(dist) == len(edges) or sum(p for p, _, _ in edges) > 0
            # pair positionally via exact probability match per successor
            prism_items = list(dist.items())
            assert abs(sum(p for _, p in prism_items) - 1.0) < 1e-9
            assert len(prism_items) == len(edges)
            # match each product edge to a prism successor with equal prob
            remaining = list(prism_items)
            for p, target, _ in edges:
                match = next(
                    (i for i, (s, q) in enumerate(remaining) if abs(q - p) < 1e-12),
                    None,
                )
                assert match is not None, f"probability {p} missing at node {prod_idx}"
                succ_state, _ = remaining.pop(match)
                pair = (target, succ_state)
                if pair not in seen:
                    seen.add(pair)
                    queue.append(pair)
            continue
        assert not choices, f"unlabeled commands at sync node {prod_idx}"
        if node.terminal is not None or node.kind == "done" or not node.event_edges:
            assert not labels, (
                f"terminal product node {prod_idx} but labels {labels} enabled"
            )
            continue
        expected = {ids[e] for e in node.event_edges}
        assert set(labels) == expected, (
            f"node {prod_idx}: PRISM enables {set(labels)}, product has {expected}"
        )
        for e, target in node.event_edges.items():
            succ = model.fire_label(state, ids[e])
            pair = (target, succ)
            if pair not in seen:
                seen.add(pair)
                queue.append(pair)
    return len(seen)
