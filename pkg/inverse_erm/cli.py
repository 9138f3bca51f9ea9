"""
Command line: `python -m inverse_erm <command> [flags]`.

Exit status is 0 when every check passes, 1 on a failed check or an
error, and 2 on a usage error.
"""
from argparse import ArgumentParser
from typing import List, Optional
import logging
import sys

from inverse_erm.config import LOG_FORMAT, configure_logging
from inverse_erm.controllers.experiment import (
    estimate_summary, estimate_text, format_table, packing_text, rates_table, simulate_text
)
from inverse_erm.controllers.harness import (
    default_jobs, run_mise_sweep, scaling_report_text, sweep_report, verify_scalings, write_sweep_outputs
)
from inverse_erm.controllers.verification import FAST, FULL, report_text, run_verification_suite
from inverse_erm.ext.error import BaseCustomError, ConfigError, InfeasiblePackingError
from inverse_erm.schemas.experiment import load_experiment_config

logger = logging.getLogger(__name__)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="inverse_erm", allow_abbrev=False,
                            description="ERM estimators for linear statistical inverse problems")
    parser.add_argument("--log-file", default=None, help="also log to this rotating file")
    parser.add_argument("--verbose", action="store_true", help="log at INFO to stderr")
    commands = parser.add_subparsers(dest="command", required=True, metavar="command")

    rates = commands.add_parser("rates", allow_abbrev=False, help="print rate exponents")
    rates.add_argument("--s", type=float, default=None)
    rates.add_argument("--q", type=float, default=None)
    rates.add_argument("--d", type=int, default=1)
    rates.add_argument("--additive", default=None, help='components as "s1:q1,s2:q2"')
    rates.add_argument("--radon", action="store_true", help="also print the Radon exponent for s")

    simulate = commands.add_parser("simulate", allow_abbrev=False, help="draw one observation")
    simulate.add_argument("--config", required=True)
    simulate.add_argument("--seed", type=int, default=None)
    simulate.add_argument("--n", type=float, default=None)

    estimate = commands.add_parser("estimate", allow_abbrev=False, help="simulate and estimate once")
    estimate.add_argument("--config", required=True)
    estimate.add_argument("--seed", type=int, default=None)
    estimate.add_argument("--n", type=float, default=None)

    sweep = commands.add_parser("sweep", allow_abbrev=False, help="MISE sweep over the n grid")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--force", action="store_true", help="overwrite existing output files")
    sweep.add_argument("--jobs", type=int, default=None)

    verify = commands.add_parser("verify", allow_abbrev=False, help="run the oracle suite")
    verify.add_argument("--full", action="store_true")
    verify.add_argument("--seed", type=int, default=None)

    scalings = commands.add_parser("scalings", allow_abbrev=False, help="net and packing scaling slopes")
    scalings.add_argument("--config", required=True)

    packing = commands.add_parser("packing", allow_abbrev=False, help="build and check one packing")
    packing.add_argument("--config", required=True)
    packing.add_argument("--delta", type=float, required=True)
    packing.add_argument("--seed", type=int, default=0)
    return parser


def _setup_logging(args):
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format=LOG_FORMAT,
                        stream=sys.stderr)
    if args.log_file:
        configure_logging("INFO", args.log_file)


def _run(args) -> int:
    if args.command == "rates":
        sys.stdout.write(format_table(rates_table(args.s, args.q, args.d, args.additive, args.radon)))
        return 0

    if args.command == "verify":
        kwargs = {} if args.seed is None else {"seed": args.seed}
        report = run_verification_suite(FULL if args.full else FAST, **kwargs)
        sys.stdout.write(report_text(report))
        return 0 if report.passed else 1

    config = load_experiment_config(args.config)

    if args.command == "simulate":
        sys.stdout.write(simulate_text(config, args.seed, args.n))
        return 0

    if args.command == "estimate":
        sys.stdout.write(estimate_text(estimate_summary(config, args.seed, args.n)))
        return 0

    if args.command == "sweep":
        jobs = args.jobs if args.jobs is not None else default_jobs()
        if jobs < 1:
            raise ConfigError(f"--jobs must be at least 1, got {jobs}", key="jobs")
        result = run_mise_sweep(config, jobs=jobs)
        write_sweep_outputs(result, args.out, force=args.force)
        sys.stdout.write(sweep_report(result))
        return 0 if result.passed else 1

    if args.command == "scalings":
        report = verify_scalings(config)
        sys.stdout.write(scaling_report_text(report))
        return 0 if report.passed else 1

    text, passed = packing_text(config, args.delta, args.seed)
    sys.stdout.write(text)
    return 0 if passed else 1


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args)
    try:
        return _run(args)
    except ConfigError as e:
        key = f" [{e.key}]" if e.key else ""
        sys.stderr.write(f"configuration error{key}: {e.message}\n")
        return 1
    except InfeasiblePackingError as e:
        lo, hi = e.feasible_range
        sys.stderr.write(f"error: {e.message} (feasible delta range [{lo!r}, {hi!r}])\n")
        return 1
    except BaseCustomError as e:
        sys.stderr.write(f"error: {e.message}\n")
        return 1
