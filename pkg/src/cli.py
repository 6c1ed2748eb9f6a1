#!/usr/bin/env python3
"""
Command-line runner for HGP chance-constrained tracking experiments.

Usage:
    python -m src.cli run CONFIG [--workers N] [--log-level LEVEL] [--log-format FORMAT]
    python -m src.cli validate CONFIG [--log-level LEVEL] [--log-format FORMAT]

The logging options may also precede the command.

Commands:
    run        Simulate data, fit the model, run every controller, write CSVs
    validate   List every invalid setting of CONFIG without running anything

Exit codes:
    0  success
    1  unexpected error
    2  invalid config
    3  dataset error
    4  kernel / special-function error
    5  inference error

Examples:
    # Reproduce the benchmark table
    python -m src.cli run configs/benchmark.yaml --workers 4

    # Check a config before a long run
    python -m src.cli validate configs/smoke.yaml
"""

import argparse
import sys
from typing import List, Optional

from src.config.experiment import validate_config
from src.config.settings import get_settings
from src.errors import ConfigError, HgpError
from src.utils.logger import configure_logging
from src.workflows.experiment import run_experiment


class Colors:
    """ANSI color codes for terminal output."""
    RED = '\033[0;31m'
    GREEN = '\033[0;32m'
    YELLOW = '\033[1;33m'
    BLUE = '\033[0;34m'
    NC = '\033[0m'  # No Color


def _paint(color: str, msg: str, stream) -> str:
    if hasattr(stream, "isatty") and stream.isatty():
        return f"{color}{msg}{Colors.NC}"
    return msg


def print_error(msg: str):
    """Print error message in red."""
    print(_paint(Colors.RED, f"Error: {msg}", sys.stderr), file=sys.stderr)


def print_success(msg: str):
    """Print success message in green."""
    print(_paint(Colors.GREEN, msg, sys.stdout))


def print_info(msg: str):
    """Print info message in blue."""
    print(_paint(Colors.BLUE, msg, sys.stdout))


def print_warning(msg: str):
    """Print warning message in yellow."""
    print(_paint(Colors.YELLOW, msg, sys.stdout))


def print_summary(summaries) -> None:
    """Table of cost, violations and infeasible steps per controller."""
    print(f"{'controller':<12} {'cost':>12} {'violations':>11} {'infeasible':>11}")
    for s in summaries:
        print(f"{s.controller:<12} {s.cost:>12.1f} {s.violations:>11d} {s.infeasible_steps:>11d}")


def _add_logging_options(parser: argparse.ArgumentParser, default=None) -> None:
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                        default=default, help="Override HGPCC_LOG_LEVEL")
    parser.add_argument("--log-format", choices=["json", "text"],
                        default=default, help="Override HGPCC_LOG_FORMAT")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hgpcc",
        description="Heteroscedastic GP chance-constrained tracking experiments",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    _add_logging_options(parser)

    # SUPPRESS keeps an absent subcommand flag from overwriting the top-level one
    logging_options = argparse.ArgumentParser(add_help=False)
    _add_logging_options(logging_options, default=argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[logging_options], help="Run an experiment config")
    run.add_argument("config", help="Path to the YAML config")
    run.add_argument("--workers", type=int, help="Threads for ensembles and episodes (>= 1)")

    validate = sub.add_parser("validate", parents=[logging_options], help="Validate a config without running it")
    validate.add_argument("config", help="Path to the YAML config")
    return parser


def _run(args) -> int:
    if args.workers is not None and args.workers < 1:
        print_error("--workers must be >= 1")
        return ConfigError.exit_code

    print_info(f"Config: {args.config}")
    result = run_experiment(args.config, workers=args.workers)
    print()
    print_summary(result.summaries)
    if result.ess is not None:
        print_info(f"Effective sample size: {result.ess:.1f}")
    print_success(f"Artifacts written to {result.output_dir}")
    return 0


def _validate(args) -> int:
    report = validate_config(args.config)
    if report.ok:
        print_success(f"{args.config}: config is valid")
        return 0
    print_warning(f"{args.config}: {len(report.issues)} issue(s)")
    for issue in report.issues:
        print(f"  - {issue}")
    return ConfigError.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the command and return the exit code."""
    args = build_parser().parse_args(argv)

    settings = get_settings()
    configure_logging(
        log_level=args.log_level or settings.log_level,
        log_format=args.log_format or settings.log_format,
    )

    try:
        if args.command == "run":
            return _run(args)
        return _validate(args)
    except HgpError as e:
        print_error(str(e))
        return e.exit_code


if __name__ == '__main__':
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print()
        print_warning("Interrupted by user")
        sys.exit(130)
    except Exception as e:
        print_error(f"Unexpected error: {e}")
        sys.exit(1)
