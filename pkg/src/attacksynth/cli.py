"""Command-line front end.

    attacksynth synthesize --target pci --secret 1337 --strategy model --seed 7
    attacksynth count FILE --alphabet upper --length 2
    attacksynth validate pci
    attacksynth targets
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from pathlib import Path

from . import automata
from .constraints import (
    DIGITS,
    EXACT,
    UP_TO,
    UPPERCASE,
    ConstraintError,
    Domain,
    disj,
    free_names,
)
from .counting import ModelCounter, model_count
from .dsl import DslSyntaxError, parse_program
from .engine import (
    COMPLETE,
    SA_INC,
    STOP_STAGNATION,
    STRATEGIES,
    Attack,
    AttackTrace,
    ObservationError,
    SAParams,
    check_partition,
    run_attack,
)
from .infotheory import log2_int
from .targets import BUILTINS, TargetSpec, UnknownTargetError, load_target

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_LEAK = 2
EXIT_BUDGET = 3

ALPHABETS = {"digits": DIGITS, "upper": UPPERCASE, "uppercase": UPPERCASE}
TRACE_HEADER = ["step", "entropy_bits", "input", "observation_id", "cost"]


class _Parser(argparse.ArgumentParser):
    # exit code 2 is reserved for "no leakage"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _domain_from_flags(args) -> Domain | None:
    if args.alphabet is None and args.length is None:
        return None
    if args.alphabet is None or args.length is None:
        raise ConstraintError("--alphabet and --length must be given together")
    alphabet = ALPHABETS.get(args.alphabet.lower(), args.alphabet)
    return Domain(alphabet, args.length, args.mode)


def _add_domain_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alphabet", help="'digits', 'upper', or the literal symbols in order")
    p.add_argument("--length", type=int, help="length bound k")
    p.add_argument("--mode", choices=(EXACT, UP_TO), default=EXACT,
                   help="count strings of length exactly k or up to k")


def trace_csv(trace: AttackTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in trace.rows:
        w.writerow([r.step, f"{r.entropy_after:.6f}", r.l_star, r.observation_id, r.cost])
    return buf.getvalue()


def exit_code(trace: AttackTrace) -> int:
    if trace.outcome == COMPLETE:
        return EXIT_OK
    if trace.stop_reason == STOP_STAGNATION:
        return EXIT_NO_LEAK
    return EXIT_BUDGET


def cmd_synthesize(args) -> int:
    target = load_target(args.target, _domain_from_flags(args))
    domain = target.domain
    if args.secret is None:
        secret = domain.random_string(random.Random(f"secret:{args.seed}"), target.high.name)
    else:
        secret = args.secret
        domain.check_string(secret, target.high.name)
    for name in ("max_steps", "time_budget"):
        v = getattr(args, name)
        if v is not None and v <= 0:
            raise ConstraintError(f"--{name.replace('_', '-')} must be positive")
    params = SAParams(args.t0, args.tmin, args.cooling)
    classes = target.classes(args.delta)
    trace = run_attack(
        classes, domain, secret, args.strategy, seed=args.seed, params=params,
        max_steps=args.max_steps, time_budget=args.time_budget, high=target.high,
        low=target.low, concrete_cost=target.concrete_cost, cross_check=args.cross_check,
    )
    text = trace_csv(trace)
    if args.trace_out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.trace_out).write_text(text)
    report = trace.report()
    report["target"] = target.name
    report["paths"] = len(target.paths)
    if args.report_out:
        Path(args.report_out).write_text(json.dumps(report, indent=2) + "\n")
    if args.emit_dot:
        Path(args.emit_dot).write_text(automata.to_dot(trace.final_state.dfa, "knowledge"))
    print(f"{target.name}: {trace.outcome} ({trace.stop_reason}) after {trace.steps} steps, "
          f"H {trace.h_init:.3f} -> {trace.h_final:.3f} bits, "
          f"{trace.queries} counting queries in {trace.counting_seconds:.2f}s",
          file=sys.stderr)
    return exit_code(trace)


def cmd_count(args) -> int:
    text = Path(args.file).read_text()
    flag_domain = _domain_from_flags(args)
    prog = parse_program(text, flag_domain)
    if prog.domain is None:
        raise ConstraintError("no domain: pass --alphabet and --length or add (domain ...)")
    formulas = list(prog.formulas) + [c for _, c in prog.paths]
    if not formulas:
        raise ConstraintError(f"{args.file}: no formulas to count")
    highs = sorted(v.name for v in prog.decls.values() if v.track == "high")
    for c in formulas:
        tracks = tuple(args.vars.split(",")) if args.vars else (free_names(c) or tuple(highs))
        n = model_count(c, prog.domain, tracks=tracks).count
        bits = log2_int(n) if n else float("-inf")
        print(f"{n}\t{bits:.6f}")
    return EXIT_OK


def validate_target(target: TargetSpec, samples: int, seed: int, out=None) -> bool:
    """Exact tautology and partition checks plus a sampled cost cross-check."""
    out = out or sys.stdout
    ok = True
    domain = target.domain
    tracks = (target.high.name, target.low.name)
    total = domain.size(target.high.name) * domain.size(target.low.name)
    classes = target.classes()
    print(f"{target.name}: |Phi|={len(target.paths)} |Psi|={len(classes)} delta={target.delta}",
          file=out)
    covered = model_count(disj(*(p.constraint for p in target.paths)), domain, tracks=tracks).count
    good = covered == total
    ok &= good
    print(f"  tautology: {'ok' if good else 'FAIL'} ({covered} of {total} pairs covered)", file=out)
    counts = [model_count(c.constraint, domain, tracks=tracks).count for c in classes]
    good = sum(counts) == total
    ok &= good
    print(f"  partition: {'ok' if good else 'FAIL'} (class sizes sum to {sum(counts)})", file=out)
    attack = Attack(classes, domain, ModelCounter(domain, target.high, target.low),
                    target.high, target.low, target.concrete_cost)
    try:
        check_partition(attack, random.Random(seed), samples)
        print(f"  sampled observations: ok ({samples} pairs"
              f"{', concrete costs agree' if target.concrete_cost else ''})", file=out)
    except ObservationError as e:
        ok = False
        print(f"  sampled observations: FAIL ({e})", file=out)
    return ok


def cmd_validate(args) -> int:
    target = load_target(args.target, _domain_from_flags(args))
    return EXIT_OK if validate_target(target, args.samples, args.seed) else EXIT_ERROR


def cmd_targets(args) -> int:
    for name in BUILTINS:
        t = load_target(name)
        d = t.domain
        print(f"{name:5} |Phi|={len(t.paths):2}  high={d.bound_for(t.high.name)} "
              f"low={d.bound_for(t.low.name)} over {len(d.alphabet)} symbols  {t.description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="attacksynth", description=__doc__.splitlines()[0] or None)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synthesize", help="run an adaptive attack against a target")
    s.add_argument("--target", required=True, help="built-in name or DSL file")
    s.add_argument("--secret", help="secret to attack (default: random from --seed)")
    s.add_argument("--strategy", choices=STRATEGIES, default=SA_INC)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--delta", type=int, help="indistinguishability threshold (default: target's)")
    s.add_argument("--max-steps", type=int, default=200)
    s.add_argument("--time-budget", type=float, help="seconds")
    s.add_argument("--t0", type=float, default=10.0)
    s.add_argument("--tmin", type=float, default=0.001)
    s.add_argument("--cooling", type=float, default=0.1)
    s.add_argument("--trace-out", help="trace CSV path ('-' or omitted: stdout)")
    s.add_argument("--report-out", help="JSON report path")
    s.add_argument("--emit-dot", help="write the final knowledge automaton as DOT")
    s.add_argument("--cross-check", action="store_true",
                   help="recount every incremental query from scratch")
    _add_domain_flags(s)
    s.set_defaults(func=cmd_synthesize)

    c = sub.add_parser("count", help="exact model count of the formulas in a file")
    c.add_argument("file")
    c.add_argument("--vars", help="comma-separated variables to count over")
    _add_domain_flags(c)
    c.set_defaults(func=cmd_count)

    v = sub.add_parser("validate", help="audit a target's path constraints")
    v.add_argument("target")
    v.add_argument("--samples", type=int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    _add_domain_flags(v)
    v.set_defaults(func=cmd_validate)

    t = sub.add_parser("targets", help="list built-in targets")
    t.set_defaults(func=cmd_targets)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DslSyntaxError as e:
        print(f"{getattr(args, 'file', None) or getattr(args, 'target', '')}:{e}", file=sys.stderr)
    except (ConstraintError, UnknownTargetError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_ERROR
