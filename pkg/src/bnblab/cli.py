"""Command-line entry point: ``bnblab <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import checks
from .branching import RULES
from .cuts import SeparationError, cut_depth, find_all_covers
from .engine import EngineError, EngineOptions, solve, tree_stats, tree_to_dot, tree_to_json
from .experiments import MODES, Truncated, run_batch, summarize, write_csv
from .instances import FAMILIES, MkpConfig, build_cross, build_qn, build_two_dim, gen_mkp
from .lp import LpProblem, solve_lp
from .model import ModelError, dumps, load, rational

log = logging.getLogger("bnblab")


class UsageError(Exception):
    pass


def parse_seeds(text: str) -> list[int]:
    """``"1..100"``, ``"3"`` or ``"1,4,9..12"``."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            a, b = int(lo), int(hi)
            if b < a:
                raise argparse.ArgumentTypeError(f"empty seed range {part}")
            seeds.extend(range(a, b + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError("no seeds given")
    return seeds


def parse_shape(text: str) -> tuple[int, int]:
    try:
        n, m = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NxM, got {text!r}") from None
    return n, m


def _add_source(p: argparse.ArgumentParser, file_ok: bool = True) -> None:
    if file_ok:
        p.add_argument("instance", nargs="?", help="instance file (JSON)")
    p.add_argument("--family", choices=FAMILIES, help="built-in or generated instance family")
    p.add_argument("--tight", action="store_true", help="tight variant (two-dim, qn, cross)")
    p.add_argument("--n", type=int, default=None, help="variables (mkp) or copies (qn)")
    p.add_argument("--m", type=int, default=None, help="rows (mkp)")
    p.add_argument("--seed", type=int, default=1, help="seed (mkp)")
    p.add_argument("--eps", default="1/100", help="objective perturbation (cross)")


def _instance_from(args):
    path = getattr(args, "instance", None)
    if path and args.family:
        raise UsageError("give either an instance file or --family, not both")
    if path:
        return load(path)
    if not args.family:
        raise UsageError("an instance file or --family is required")
    fam = args.family
    if fam == "mkp":
        if args.tight:
            raise UsageError("--tight does not apply to mkp")
        return gen_mkp(MkpConfig(args.n or 20, args.m or 50, args.seed))
    if fam == "two-dim":
        return build_two_dim(args.tight)
    if fam == "qn":
        return build_qn(args.n or 1, args.tight)
    return build_cross(args.tight, rational(args.eps))


def cmd_generate(args) -> int:
    inst = _instance_from(args)
    text = dumps(inst)
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {inst.name} ({inst.n} variables, {len(inst.constraints)} constraints) to {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_solve(args) -> int:
    inst = _instance_from(args)
    keep = args.keep_tree or bool(args.tree_json or args.tree_dot)
    cutoff = rational(args.cutoff) if args.cutoff is not None else None
    res = solve(inst, EngineOptions(rule=args.rule, cutoff=cutoff, node_limit=args.node_limit, keep_tree=keep))
    if res.truncated:
        best = "none" if res.value is None else str(res.value)
        print(f"truncated, best={best}, nodes={res.node_count}")
    elif res.status == "optimal":
        print(f"optimal, value={res.value}, nodes={res.node_count}")
    else:
        print(f"{res.status}, nodes={res.node_count}")
    print(f"lp solves={res.lp_solve_count} (probes {res.probe_lp_count}), root lp={res.root_lp.value}")
    if args.verbose and res.incumbent.point is not None:
        for v in inst.variables:
            print(f"  {v.label} = {res.incumbent.point[v.index]}")
    if keep:
        stats = tree_stats(res)
        print(f"depth histogram: {stats.depth_histogram}")
        print("statuses: " + ", ".join(f"{k}={v}" for k, v in stats.status_counts.items()))
    if args.tree_json:
        Path(args.tree_json).write_text(tree_to_json(res.tree, inst))
    if args.tree_dot:
        Path(args.tree_dot).write_text(tree_to_dot(res.tree, inst))
    if res.truncated:
        print(f"truncated at node limit {args.node_limit}", file=sys.stderr)
        return 3
    return 0


def cmd_separate(args) -> int:
    inst = _instance_from(args)
    lp = solve_lp(LpProblem(inst))
    if not lp.optimal:
        print(f"root LP {lp.status}")
        return 1
    cuts = find_all_covers(inst, lp.point)
    records = [c.to_record(inst, lp.point) for c in cuts]
    if args.json:
        print(json.dumps(records, indent=1))
    else:
        print(f"root LP value {lp.value}; {len(cuts)} violated cover(s)")
        for rec, cut in zip(records, cuts):
            print(f"  {rec['source']}: {' + '.join(rec['cover'])} <= {cut.rhs}   "
                  f"d*={rec['d_star']} depth={cut_depth(cut, lp.point):.6g}")
    return 0


def cmd_experiment(args) -> int:
    n, m = args.mkp
    modes = MODES if args.mode == "all" else (args.mode,)

    def progress(outcome):
        seed, recs, err = outcome
        log.info("seed %d: %s", seed, err or f"{len(recs)} records")

    batch = run_batch(n, m, args.seeds, args.rule, modes, args.rounds, args.node_cap, progress=progress)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            write_csv(batch.records, fh)
    else:
        write_csv(batch.records, sys.stdout)
    for seed, err in batch.excluded:
        print(f"excluded seed {seed}: {err}", file=sys.stderr)
    if batch.records:
        report = summarize(batch.records).report()
        if args.summary:
            Path(args.summary).write_text(report)
        if args.output:
            sys.stdout.write(report)
    return 0


def cmd_verify(args) -> int:
    print("reproducing acceptance criteria 1-10")
    results = checks.run_all(args.seeds, args.qn_max, args.qn_budget, log=print)
    if args.csv:
        # the batch CSV is the output of criterion 8
        Path(args.csv).write_text(results[7].output)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bnblab", description="Exact branch-and-bound and cover-cut experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write an instance file")
    _add_source(p, file_ok=False)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve an instance by branch and bound")
    _add_source(p)
    p.add_argument("--rule", choices=RULES, default="fsb-product")
    p.add_argument("--cutoff", help="prune nodes whose bound does not exceed this value")
    p.add_argument("--node-limit", type=int)
    p.add_argument("--keep-tree", action="store_true")
    p.add_argument("--tree-json", help="write the tree as JSON")
    p.add_argument("--tree-dot", help="write the tree in graphviz format")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("separate", help="list violated cover cuts at the root LP point")
    _add_source(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("experiment", help="run a seeded MKP cut batch and write CSV")
    p.add_argument("--mode", choices=MODES + ("all",), default="single-cut")
    p.add_argument("--mkp", type=parse_shape, default=(20, 50), metavar="NxM")
    p.add_argument("--seeds", type=parse_seeds, default=list(range(1, 101)), metavar="A..B")
    p.add_argument("--rule", choices=RULES, default="fsb-product")
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--node-cap", type=int, default=10 ** 6)
    p.add_argument("-o", "--output")
    p.add_argument("--summary", help="also write the summary report here")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify-paper", help="run every acceptance criterion and report pass/fail")
    p.add_argument("--seeds", type=parse_seeds, default=list(checks.BATCH_SEEDS), metavar="A..B")
    p.add_argument("--qn-max", type=int, default=checks.QN_MAX)
    p.add_argument("--qn-budget", type=float, default=checks.QN_BUDGET, help="seconds")
    p.add_argument("--csv", help="save the batch CSV")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ModelError, EngineError, SeparationError, Truncated, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
