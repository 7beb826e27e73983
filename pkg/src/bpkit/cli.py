"""Command-line frontend.

Commands: run, sample, check, prob, translate, bench, rl.  Exit codes:
0 success, 1 property violation or unsat deadlock, 2 usage error.  All
randomized commands take --seed (default from BPK_SEED) and are
reproducible.  CSV-writing commands render a companion PNG figure next
to the CSV.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import report
from .analysis import check_safety, reach_probability, sample_csv, sample_estimate
from .bprogram import First, Random, Terminal, run
from .events import Event, Predicate
from .examples import REGISTRY, InvalidParameters, SolverProgram, build_example
from .explore import explore_and_build
from .prism import properties_text, translate_program_prism
from .smt.runner import run_smt
from .smv import translate_program


class UsageError(Exception):
    pass


def _default_seed() -> int:
    return int(os.environ.get("BPK_SEED", "0"))


def _parse_params(pairs: list[str]) -> dict:
    params = {}
    for pair in pairs:
        if "=" not in pair:
            raise UsageError(f"--param expects key=value, got {pair!r}")
        key, _, raw = pair.partition("=")
        try:
            value: object = int(raw)
        except ValueError:
            try:
                value = float(raw)
            except ValueError:
                value = raw
        params[key.strip()] = value
    return params


def _build(name: str, param_pairs: list[str]):
    try:
        return build_example(name, **_parse_params(param_pairs))
    except InvalidParameters as exc:
        raise UsageError(str(exc)) from exc


def _require_discrete(prog, command: str):
    if isinstance(prog, SolverProgram):
        raise UsageError(
            f"{command!r} needs a discrete example; solver-based examples "
            "support only 'run'"
        )
    return prog


def _named_events(name: str):
    return Predicate(f"named_{name}", lambda e, _n=name: e.name == _n)


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)
        print(f"wrote {path}")


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_run(args) -> int:
    prog = _build(args.example, args.param)
    if isinstance(prog, SolverProgram):
        trace = run_smt(
            prog.program, prog.variables, max_steps=args.max_steps, seed=args.seed
        )
        for i, model in enumerate(trace.models):
            print(f"{i}: {model}")
        print(f"terminal: {trace.terminal.name}  total_reward: {trace.total_reward:g}")
        return 1 if trace.terminal == Terminal.DEADLOCK else 0
    policy = Random(args.seed) if args.policy == "random" else First()
    trace = run(prog, policy=policy, max_steps=args.max_steps, seed=args.seed)
    for i, e in enumerate(trace.events):
        print(f"{i}: {e}")
    print(f"terminal: {trace.terminal.name}  total_reward: {trace.total_reward:g}")
    return 0


def cmd_sample(args) -> int:
    _require_discrete(_build(args.example, args.param), "sample")
    rep = sample_estimate(
        lambda: _build(args.example, args.param),
        _named_events(args.target),
        args.n,
        seed=args.seed,
        policy_factory=lambda s: Random(s),
    )
    print(f"mean: {rep.mean:.6f}  SE: {rep.standard_error:.6f}  runs: {args.n}")
    if args.out:
        _write(args.out, sample_csv(rep))
        png = report.sample_figure(
            rep.rows, report.figure_path(args.out), f"{args.example}: P({args.target})"
        )
        print(f"wrote {png}")
    return 0


def cmd_check(args) -> int:
    prog = _require_discrete(_build(args.example, args.param), "check")
    _, pg = explore_and_build(prog)
    verdict = check_safety(pg, bad=_named_events(args.bad))
    if verdict.holds:
        print(f"safe: no reachable {args.bad!r} event")
        return 0
    events = " ".join(str(e) for e in verdict.counterexample.events)
    print(f"violated: counterexample {events}")
    return 1


def cmd_prob(args) -> int:
    prog = _require_discrete(_build(args.example, args.param), "prob")
    _, pg = explore_and_build(prog)
    result = reach_probability(
        pg, _named_events(args.target), mode=args.mode, tol=args.tol
    )
    print(f"{result.value:.6f}")
    return 0


def cmd_translate(args) -> int:
    prog = _require_discrete(_build(args.example, args.param), "translate")
    graphs, pg = explore_and_build(prog)
    universe = pg.universe
    if args.to == "smv":
        text = translate_program(graphs, universe)
    else:
        text = translate_program_prism(graphs, universe)
    _write(args.out, text)
    if args.to == "prism" and args.target:
        targets = [e for e in universe if e.name == args.target]
        if not targets:
            raise UsageError(f"target event {args.target!r} not in the universe")
        props = properties_text(universe, targets)
        props_path = (
            (args.out[:-6] if args.out.endswith(".prism") else args.out) + ".props"
            if args.out
            else None
        )
        _write(props_path, props)
    return 0


_BENCH_SUITES = {
    "dice": [("knuth_dice", {"n": n}, "result_0") for n in (6, 7, 8, 10, 16, 20)],
    "hot_cold": [("hot_cold", {"n": n, "m": 1}, "HOT") for n in (3, 5, 10, 20, 30)],
}


def cmd_bench(args) -> int:
    if args.suite not in _BENCH_SUITES:
        raise UsageError(
            f"unknown suite {args.suite!r}; known: {', '.join(sorted(_BENCH_SUITES))}"
        )
    rows = []
    for name, params, target in _BENCH_SUITES[args.suite]:
        t0 = time.perf_counter()
        prog = build_example(name, **params)
        _, pg = explore_and_build(prog)
        value = reach_probability(pg, _named_events(target)).value
        elapsed = time.perf_counter() - t0
        # semicolon-separated so labels stay one CSV field
        label = name + "(" + ";".join(f"{k}={v}" for k, v in params.items()) + ")"
        rows.append((label, pg.sync_node_count, target, value, elapsed))
        print(f"{label}: sync_nodes={pg.sync_node_count} P({target})={value:.6f} {elapsed:.2f}s")
    lines = ["example,sync_nodes,target,probability,seconds"]
    for label, nodes, target, value, elapsed in rows:
        lines.append(f"{label},{nodes},{target},{value:.10g},{elapsed:.4g}")
    _write(args.out, "\n".join(lines) + "\n")
    if args.out:
        png = report.bench_figure(
            [r[0] for r in rows],
            [r[1] for r in rows],
            report.figure_path(args.out),
            "sync nodes",
            f"suite {args.suite}",
        )
        print(f"wrote {png}")
    return 0


def cmd_rl(args) -> int:
    from . import rlenv

    if args.example == "pancake":
        env = rlenv.pancake_env(**_parse_params(args.param))
    elif args.example == "bitflip_two_player":
        env = rlenv.BitflipEnv(**_parse_params(args.param))
    else:
        raise UsageError(
            "rl supports the examples 'pancake' and 'bitflip_two_player'"
        )
    result = rlenv.train_tabular_q(env, args.episodes, seed=args.seed)
    reward, steps = rlenv.rollout(
        env, rlenv.greedy_policy_chooser(result), seed=args.seed
    )
    print(f"greedy rollout: reward {reward:g} in {steps} steps")
    if args.out:
        _write(args.out, result.csv())
        png = report.learning_curve_figure(
            result.rows, report.figure_path(args.out), f"rl {args.example}"
        )
        print(f"wrote {png}")
    return 0


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bpkit", description="behavioral-program execution and analysis"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("example", help=f"one of: {', '.join(sorted(REGISTRY))}")
        p.add_argument(
            "--param",
            "-p",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="example parameter (repeatable)",
        )
        p.add_argument("--seed", type=int, default=_default_seed())

    p = sub.add_parser("run", help="execute one trace")
    add_common(p)
    p.add_argument("--policy", choices=["first", "random"], default="random")
    p.add_argument("--max-steps", type=int, default=10**4)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sample", help="estimate event probability by sampling")
    add_common(p)
    p.add_argument("--target", required=True, help="event name")
    p.add_argument("--n", type=int, required=True, help="number of runs")
    p.add_argument("--out", help="CSV path (PNG written next to it)")
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("check", help="safety check against a bad event")
    add_common(p)
    p.add_argument("--bad", required=True, help="bad event name")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("prob", help="exact reachability probability")
    add_common(p)
    p.add_argument("--target", required=True, help="event name")
    p.add_argument("--mode", choices=["max", "min"], default="max")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(fn=cmd_prob)

    p = sub.add_parser("translate", help="emit an SMV or PRISM model")
    add_common(p)
    p.add_argument("--to", choices=["smv", "prism"], required=True)
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.add_argument("--target", help="also emit a .props reachability query (prism)")
    p.set_defaults(fn=cmd_translate)

    p = sub.add_parser("bench", help="run a benchmark suite to CSV")
    p.add_argument("suite", help=f"one of: {', '.join(sorted(_BENCH_SUITES))}")
    p.add_argument("--out", help="CSV path (PNG written next to it)")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("rl", help="tabular Q-learning on an environment")
    add_common(p)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--out", help="learning-curve CSV path (PNG next to it)")
    p.set_defaults(fn=cmd_rl)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
