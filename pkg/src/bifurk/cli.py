"""Command-line entry point: ``bifurk simulate | fit | test | verify``.

Exit codes: 0 on success, 2 on usage errors, 3 on bad input data. ``test``
exits 0 whether or not the null is rejected; the decision is in the report.
``verify --strict`` exits 1 when a verdict fails.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import experiments, hypotest, inference
from .bar import simulate_bar
from .errors import BifurkError
from .io import load_params, load_plan, read_lineage, write_lineage, write_report

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_DATA = 3

TEST_CHOICES = ("equal-dynamics", "equal-alpha", "equal-beta", "equal-fixed-point", "sister")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return value


def _depth(text: str) -> int:
    value = int(text)
    if not 0 <= value <= 26:
        raise argparse.ArgumentTypeError("depth must be in [0, 26]")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bifurk", description="Bifurcating autoregressive simulation, fitting and tests."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a complete tree from a parameter file")
    p.add_argument("--params", required=True)
    p.add_argument("--depth", required=True, type=_depth)
    p.add_argument("--seed", required=True, type=_seed)
    p.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="fit the model to a lineage file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--constrain-alpha-zero", action="store_true")

    p = sub.add_parser("test", help="run an asymmetry test on a lineage file")
    p.add_argument("--data", required=True)
    p.add_argument("--which", required=True, choices=TEST_CHOICES)
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="run a Monte Carlo experiment plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=_seed, help="overrides the plan's seed")
    p.add_argument("--csv", help="also write per-replication statistics here")
    p.add_argument("--strict", action="store_true", help="exit 1 if a verdict fails")
    return parser


def _simulate(args) -> int:
    params, root = load_params(args.params)
    lineage = simulate_bar(params, args.depth, args.seed, root)
    write_lineage(lineage, args.out)
    print(f"wrote {len(lineage)} cells to {args.out}")
    return EXIT_OK


def _fit(args) -> int:
    result = inference.fit(read_lineage(args.data), args.constrain_alpha_zero)
    write_report(result, args.out)
    n = result.n_effective
    names = ("alpha0", "beta0", "alpha1", "beta1")
    for name, value, var in zip(names, result.theta_hat, result.sigma_prime_hat.diagonal()):
        print(f"{name:>7} = {value: .6f}  (se {math.sqrt(var / n):.6f})")
    print(f"{'sigma2':>7} = {result.sigma2_hat: .6f}")
    print(f"{'rho':>7} = {result.rho_hat: .6f}")
    return EXIT_OK


def _test(args) -> int:
    report = hypotest.run_test(read_lineage(args.data), args.which)
    write_report(report, args.out)
    print(f"{report.name}: statistic {report.statistic:.6g}, p-value {report.p_value:.6g}")
    return EXIT_OK


def _verify(args) -> int:
    plan = load_plan(args.plan, args.seed)
    report = experiments.run(plan)
    write_report(report, args.out)
    if args.csv:
        report.write_csv(args.csv)
    for v in report.verdicts:
        print(f"{'PASS' if v.passed else 'FAIL'} {v.rule} (depth {v.depth}): {v.value:.6g}")
    if report.flags.get("no_limit_detected"):
        print("no limit detected: law-of-large-numbers verdicts withheld")
    if args.strict and not report.passed:
        return EXIT_FAILED
    return EXIT_OK


_COMMANDS = {"simulate": _simulate, "fit": _fit, "test": _test, "verify": _verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (BifurkError, OSError, json.JSONDecodeError) as exc:
        print(f"bifurk {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
