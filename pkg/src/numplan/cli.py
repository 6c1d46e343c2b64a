"""Command-line interface: solve, validate, analyze, decide, gen, bench."""

from __future__ import annotations

import argparse
import random
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .frontend import ParseError, load_task
from .generators import FAMILIES, gen_instance
from .lnf import NotLinear, analyze, check_acyclic, to_lnf
from .model import format_rational
from .relaxation import check_monotonic_structure, decide_strong
from .rpg import DEFAULT_MAX_LAYERS, dump_graph, relaxed_plan
from .search import CostWeights, SearchConfig, solve
from .validate import PlanFormatError, format_plan, parse_plan, validate_plan

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
STATS_KEYS = ("stage", "expansions", "evals", "h_init", "length", "metric")


class UsageError(Exception):
    pass


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _positive(text: str) -> int:
    n = int(text)
    if n <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return n


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, (int, float, Fraction)):
        return format_rational(x)
    return str(x)


def stats_line(stats: dict) -> str:
    parts = [f"{k}={_fmt(stats.get(k))}" for k in STATS_KEYS]
    for k in ("mode", "capped_graphs", "guarantees"):
        if k in stats:
            parts.append(f"{k}={_fmt(stats[k])}")
    return " ".join(parts)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}")


def _load(args):
    return load_task(_read(args.domain), _read(args.problem))


def _config(args) -> SearchConfig:
    return SearchConfig(
        mode=args.mode,
        weights=CostWeights(args.wg, args.wh),
        max_expansions=args.max_expansions,
        max_layers=args.max_layers,
        helpful=not args.no_helpful,
        h_mix=args.h_mix,
    )


# -- verbs ------------------------------------------------------------------------


def cmd_solve(args) -> int:
    t = _load(args)
    if args.dump_rpg:
        lt = to_lnf(t)
        g, ex = relaxed_plan(lt, lt.init, args.max_layers)
        print(dump_graph(g), file=sys.stderr)
        if ex is not None:
            order = ex.linearize(random.Random(args.seed))
            print("; relaxed plan: " + " ".join(lt.actions[a].name for a in order),
                  file=sys.stderr)
    r = solve(t, args.mode, _config(args))
    if "quality" in r.stats:
        print(f"; quality: {r.stats['quality']}", file=sys.stderr)
    print(stats_line(r.stats), file=sys.stderr)
    if not r.solved:
        print(f"unsolved: {r.reason}", file=sys.stderr)
        return EXIT_FAIL
    sys.stdout.write(format_plan(t, r.plan, r.stats.get("metric")))
    return EXIT_OK


def cmd_validate(args) -> int:
    t = _load(args)
    try:
        plan = parse_plan(_read(args.plan), t)
    except PlanFormatError as exc:
        # an unreadable or unknown step makes the plan invalid, not the input
        print(f"plan invalid: {exc}", file=sys.stderr)
        return EXIT_FAIL
    v = validate_plan(t, plan)
    print(v.describe(), file=sys.stderr)
    if v.valid and v.metric is not None:
        print(format_rational(v.metric))
    return EXIT_OK if v.valid else EXIT_FAIL


def cmd_analyze(args) -> int:
    t = _load(args)
    rep = analyze(t)
    mono = check_monotonic_structure(rep["task"])
    out = [
        f"propositions: {rep['propositions']}",
        f"variables: {rep['variables']} ({rep['original_variables']} original)",
        f"actions: {rep['actions']}",
        f"lnf: {'ok' if rep['lnf_ok'] else 'violated'}",
    ]
    out += [f"  {v}" for v in rep["lnf_violations"]]
    out.append("inversions: " + (", ".join(f"{a}<->{b}" for a, b in rep["inversions"]) or "none"))
    out.append("assign edges: " + (", ".join(f"{a}->{b}" for a, b in rep["assign_edges"]) or "none"))
    out.append(f"acyclic: {'yes' if rep['acyclic'] else 'no'}")
    out.append("relevant: " + (" ".join(rep["relevant"]) or "none"))
    out.append(f"monotone: {'yes' if mono.ok else 'no'}")
    for item in mono.flagged:
        why = item.reason or "not judged"
        out.append(f"  {item.where}: {item.text} ({why})")
    print("\n".join(out))
    return EXIT_OK


def cmd_decide(args) -> int:
    lt = to_lnf(_load(args))
    if not check_acyclic(lt)[1]:
        raise UsageError("decide needs acyclic := effects")
    r = decide_strong(lt, lt.init)
    print(f"{r.verdict} iterations={r.iterations}")
    return EXIT_OK if r.solvable else EXIT_FAIL


def _instance_paths(out: Path, inst) -> tuple:
    stem = f"{inst.family}-{inst.size}-{inst.seed}"
    return out / f"{stem}-domain.pddl", out / f"{stem}-problem.pddl", out / f"{stem}.plan"


def cmd_gen(args) -> int:
    try:
        inst = gen_instance(args.family, args.size, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = _instance_paths(out, inst)
    for p, text in zip(paths, (inst.domain, inst.problem, inst.witness_text())):
        p.write_text(text)
        print(p)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.family not in FAMILIES:
        raise UsageError(f"unknown family {args.family!r}; choose from {', '.join(FAMILIES)}")
    config = _config(args)
    solved = total = 0
    for size in range(1, args.max_size + 1):
        for k in range(args.seeds):
            seed = args.seed + k
            inst = gen_instance(args.family, size, seed)
            t = load_task(inst.domain, inst.problem)
            t0 = time.perf_counter()
            r = solve(t, args.mode, config)
            dt = time.perf_counter() - t0
            total += 1
            solved += r.solved
            print(f"{args.family} size={size} seed={seed} witness={len(inst.witness)} "
                  f"{stats_line(r.stats)} time={dt:.2f}s", flush=True)
    print(f"solved {solved}/{total}")
    return EXIT_OK if solved == total else EXIT_FAIL


# -- parser ---------------------------------------------------------------------------


def _search_flags(p: argparse.ArgumentParser):
    p.add_argument("--mode", choices=("speed", "quality"), default="speed")
    p.add_argument("--wg", type=_rational, default=Fraction(1), help="weight of g in quality mode")
    p.add_argument("--wh", type=_rational, default=Fraction(5), help="weight of h in quality mode")
    p.add_argument("--max-expansions", type=_positive, default=1_000_000)
    p.add_argument("--max-layers", type=_positive, default=DEFAULT_MAX_LAYERS)
    p.add_argument("--no-helpful", action="store_true", help="skip the helpful-actions EHC stage")
    p.add_argument("--h-mix", type=_rational, default=Fraction(0),
                   help="add this times the relaxed plan length to the quality-mode h")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="numplan", description="Numeric forward-search planner.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("solve", help="find a plan")
    p.add_argument("domain")
    p.add_argument("problem")
    _search_flags(p)
    p.add_argument("--dump-rpg", action="store_true", help="print the initial relaxed planning graph")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="check a plan file")
    p.add_argument("domain")
    p.add_argument("problem")
    p.add_argument("plan")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="report normal form, acyclicity and relevance")
    p.add_argument("domain")
    p.add_argument("problem")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("decide", help="decide relaxed solvability from the initial state")
    p.add_argument("domain")
    p.add_argument("problem")
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("gen", help="generate an instance with a witness plan")
    p.add_argument("family", help=" | ".join(FAMILIES))
    p.add_argument("size", type=int)
    p.add_argument("seed", type=int)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="solve generated instances")
    p.add_argument("family", help=" | ".join(FAMILIES))
    p.add_argument("--max-size", type=_positive, default=8)
    p.add_argument("--seeds", type=_positive, default=3)
    _search_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def run_cli(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (UsageError, ParseError, NotLinear, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main(argv: Optional[list] = None):
    sys.exit(run_cli(argv))


if __name__ == "__main__":
    main()
