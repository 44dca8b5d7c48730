"""Command-line front end: ``linsub <subcommand> ...``.

Exit codes: 0 on success, 1 on a negative verdict, 2 on errors and limits.
Term arguments starting with '@' are read from the named file.
"""

import argparse
import json
import os
import sys
import tempfile

from . import reduction as red
from .measure import NotShallow, head_measure, trace_stats
from .syntax import ParseError, parse, show
from .terms import FamilyTooLarge, family_term, gen_family
from .turing import (
    DecodeMismatch,
    MachineError,
    NotAScottString,
    load_machine,
    machine_term,
    run_encoded,
)
from .unfoldcheck import fill_matrix, preprocess, verdict

STRATEGIES = {
    "head": red.HEAD,
    "linear-head": red.LINEAR_HEAD,
    "s": red.SUBSTITUTION,
    "beta": frozenset({red.RuleLabel.Beta}),
    "lsub": red.LSUB,
}


class UsageError(Exception):
    pass


def read_term(arg: str):
    text = arg
    if arg.startswith("@"):
        with open(arg[1:], encoding="utf-8") as fh:
            text = fh.read()
    return parse(text)


def _emit(args, data: dict, lines) -> None:
    if args.json:
        print(json.dumps(data, ensure_ascii=False))
    else:
        for line in lines:
            print(line)


def cmd_reduce(args) -> int:
    t = read_term(args.term)
    rules = STRATEGIES[args.strategy]
    policy = red.Policy(args.policy)
    try:
        nf, trace = red.normalize(t, rules, policy, args.max_steps)
    except red.StepLimitExceeded as e:
        path = args.trace or os.path.join(tempfile.mkdtemp(prefix="linsub-"), "partial-trace.json")
        red.dump_trace(e.trace, path, e.term, {"complete": False})
        print(f"step limit {args.max_steps} exceeded; partial trace written to {path}", file=sys.stderr)
        return 2
    counts = {r.value: n for r, n in sorted(trace.counts.items(), key=lambda kv: kv[0].value)}
    data = {"normal_form": show(nf), "steps": len(trace), "counts": counts}
    lines = [show(nf), f"steps: {len(trace)}"] + [f"{k}: {v}" for k, v in counts.items()]
    if args.strategy == "linear-head":
        stats = trace_stats(trace)
        data["stats"] = stats.to_json()
        data["unfolding"] = show(red.unfold(nf))
        lines += [
            f"mult: {stats.mult}",
            f"expo: {stats.expo}",
            f"phases: {stats.phases}",
            f"quadratic bound: {'ok' if stats.quadratic_ok else 'violated'}",
        ]
    if args.trace:
        red.dump_trace(trace, args.trace, nf, {"complete": True})
    _emit(args, data, lines)
    return 0


def cmd_measure(args) -> int:
    t = read_term(args.term)
    try:
        hm = head_measure(t)
    except NotShallow:
        hm = None
    data = {"head_measure": hm, "es_count": t.es, "shallow": t.shallow, "size": t.size}
    lines = [
        f"head_measure: {'n/a' if hm is None else hm}",
        f"es_count: {t.es}",
        f"shallow: {str(t.shallow).lower()}",
        f"size: {t.size}",
    ]
    _emit(args, data, lines)
    return 0


def cmd_unfold(args) -> int:
    t = read_term(args.term)
    u = red.unfold(t, args.cap)
    print(show(u))
    return 0


def cmd_unfold_eq(args) -> int:
    a, b = read_term(args.a), read_term(args.b)
    pp = preprocess(a, b)
    m = fill_matrix(pp, complete=args.complete, worklist=args.worklist)
    yes = verdict(m)
    if args.matrix:
        with open(args.matrix, "w", encoding="utf-8") as fh:
            fh.write(m.to_tsv())
    print("yes" if yes else "no")
    return 0 if yes else 1


def _delta(args, m):
    if args.delta is None:
        return m.default_delta()
    return [s for s in args.delta.split(",") if s]


def cmd_tm(args) -> int:
    m = load_machine(args.machine)
    delta = _delta(args, m)
    if args.tm_command == "compile":
        print(show(machine_term(m, delta)))
        return 0
    u = list(args.input) if "," not in args.input else [s for s in args.input.split(",") if s]
    r = run_encoded(m, delta, "".join(u), args.engine, args.max_steps)
    data = {"output": r.output, "steps": r.steps, "mult": r.mult, "machine_steps": r.g}
    lines = [f"output: {r.output}", f"steps: {r.steps}", f"machine steps: {r.g}"]
    if r.stats is not None:
        data["stats"] = r.stats.to_json()
        data["certified"] = r.certified
        lines += [f"mult: {r.mult}", f"quadratic bound: {'ok' if r.stats.quadratic_ok else 'violated'}"]
    _emit(args, data, lines)
    return 0


def cmd_gen(args) -> int:
    if args.reduct:
        t, r = gen_family(args.n)
        print(show(t))
        print(show(r))
    else:
        print(show(family_term(args.n)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="linsub", description="Head and linear head reduction, unfolding checks, Turing machine encodings.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("reduce", help="normalize a term under a strategy")
    r.add_argument("term")
    r.add_argument("--strategy", choices=sorted(STRATEGIES), default="head")
    r.add_argument("--policy", choices=[x.value for x in red.Policy], default="lo")
    r.add_argument("--max-steps", type=int, default=10_000)
    r.add_argument("--trace", help="write the trace as JSON to this path")
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_reduce)

    m = sub.add_parser("measure", help="head measure and substitution count")
    m.add_argument("term")
    m.add_argument("--json", action="store_true")
    m.set_defaults(func=cmd_measure)

    u = sub.add_parser("unfold", help="print the unfolding of a term")
    u.add_argument("term")
    u.add_argument("--cap", type=int, default=red.DEFAULT_UNFOLD_CAP)
    u.set_defaults(func=cmd_unfold)

    e = sub.add_parser("unfold-eq", help="decide whether two terms have α-equal unfoldings")
    e.add_argument("a")
    e.add_argument("b")
    e.add_argument("--matrix", help="write the matrix as TSV to this path")
    e.add_argument("--complete", action="store_true", help="fill every cell, not only those the root needs")
    e.add_argument("--worklist", action="store_true")
    e.set_defaults(func=cmd_unfold_eq)

    tm = sub.add_parser("tm", help="compile and run Turing machines")
    tsub = tm.add_subparsers(dest="tm_command", required=True)
    c = tsub.add_parser("compile")
    c.add_argument("machine")
    c.add_argument("--delta", help="comma-separated input alphabet")
    c.set_defaults(func=cmd_tm)
    x = tsub.add_parser("run")
    x.add_argument("machine")
    x.add_argument("input", help="input string; use commas to separate multi-character symbols")
    x.add_argument("--delta", help="comma-separated input alphabet")
    x.add_argument("--engine", choices=["head", "linear-head"], default="head")
    x.add_argument("--max-steps", type=int, default=10**7)
    x.add_argument("--json", action="store_true")
    x.set_defaults(func=cmd_tm)

    g = sub.add_parser("gen", help="generate fixtures")
    gsub = g.add_subparsers(dest="gen_command", required=True)
    f = gsub.add_parser("family", help="the term t_n, and with --reduct its normal form r_n")
    f.add_argument("n", type=int)
    f.add_argument("--reduct", action="store_true")
    f.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except red.StepLimitExceeded as e:
        print(f"error: step limit {e.limit} exceeded", file=sys.stderr)
        return 2
    except (ParseError, red.ReductionError, MachineError, NotAScottString, DecodeMismatch,
            FamilyTooLarge, OSError, json.JSONDecodeError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
