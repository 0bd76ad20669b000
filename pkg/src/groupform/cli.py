"""Command line entry point: ``groupform form|gen|check|validate``."""

from __future__ import annotations

import argparse
import json
import sys
from decimal import Decimal, InvalidOperation
from typing import Optional, Sequence

from .harness import ExitStatus, RunConfig, audit_json, check_group, dumps_report, run
from .io import DatasetError, Diagnostic, dumps_dataset, load_dataset, validate
from .synth import ConfigError, generate_synthetic


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _decimal(text: str) -> Decimal:
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a decimal: {text!r}") from None
    if not value.is_finite() or value < 0:
        raise argparse.ArgumentTypeError("must be a finite decimal >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groupform", description="Constrained group formation for one item.")
    sub = parser.add_subparsers(dest="command", required=True)

    form = sub.add_parser("form", help="construct a group of size k")
    form.add_argument("--dataset", required=True)
    form.add_argument("--k", type=_positive, required=True)
    form.add_argument("--solver", choices=("greedy", "exact", "both"), default="greedy")
    form.add_argument("--policy", choices=("binary", "graded"), default="graded")
    form.add_argument("--seed", type=_u64, default=0)
    form.add_argument("--epsilon", type=_decimal, default=None)
    form.add_argument("--include-self", action="store_true",
                      help="apply a user's value constraints to the user too")
    form.add_argument("--out", help="write the report here instead of stdout")

    gen = sub.add_parser("gen", help="write a synthetic dataset")
    gen.add_argument("--users", type=_positive, required=True)
    gen.add_argument("--seed", type=_u64, required=True)
    gen.add_argument("--density", type=float, default=0.5)
    gen.add_argument("--scores", choices=("uniform", "normal", "ties"), default="uniform")
    gen.add_argument("--out", required=True)

    check = sub.add_parser("check", help="audit a given group")
    check.add_argument("--dataset", required=True)
    check.add_argument("--members", required=True, help="comma-separated user ids")
    check.add_argument("--include-self", action="store_true")

    val = sub.add_parser("validate", help="validate a dataset without solving")
    val.add_argument("--dataset", required=True)
    return parser


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _diagnostics_json(diags: Sequence[Diagnostic]) -> str:
    payload = {
        "status": "invalid" if any(d.severity == "error" for d in diags) else "ok",
        "diagnostics": [{"location": d.location, "severity": d.severity, "message": d.message} for d in diags],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "gen":
        try:
            ds = generate_synthetic(args.users, args.seed, args.density, args.scores)
        except ConfigError as e:
            print(f"error: {e}", file=sys.stderr)
            return ExitStatus.INVALID
        _emit(dumps_dataset(ds), args.out)
        return ExitStatus.OK

    try:
        dataset = load_dataset(args.dataset)
    except DatasetError as e:
        sys.stdout.write(_diagnostics_json(e.diagnostics))
        return ExitStatus.INVALID

    if args.command == "validate":
        sys.stdout.write(_diagnostics_json(validate(dataset)))
        return ExitStatus.OK

    if args.command == "check":
        members = [m.strip() for m in args.members.split(",") if m.strip()]
        try:
            audit = check_group(dataset, members, args.include_self)
        except (KeyError, ValueError) as e:
            msg = e.args[0] if e.args else str(e)
            sys.stdout.write(json.dumps({"status": "invalid", "error": msg}, indent=2) + "\n")
            return ExitStatus.INVALID
        sys.stdout.write(json.dumps(audit_json(audit, members), indent=2, sort_keys=True) + "\n")
        return ExitStatus.OK if audit.satisfiable else ExitStatus.UNSATISFIABLE

    config = RunConfig(args.k, args.solver, args.policy, args.seed, args.epsilon, args.include_self)
    report, status = run(config, dataset)
    _emit(dumps_report(report), args.out)
    return int(status)


if __name__ == "__main__":
    sys.exit(main())
