"""
Command-line entry point for the experiment harness.

    python -m matvec_lab lower-single --seed 7 --q 4,8,16 --trials 20 --out results/lower_single.csv
    python -m matvec_lab show-config lift-sim

Exit codes: 0 when every acceptance check passes, 1 on an acceptance
failure, 2 on a configuration or precondition error.
"""

import logging
import sys
from pathlib import Path
from typing import Any, List, Optional

from dotenv import load_dotenv

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from matvec_lab.errors import ConfigError, DivisibilityError, ResultWriteError, UnknownStrategy
from matvec_lab.experiments import (
    DEFAULTS,
    EXPERIMENTS,
    aggregate_rows,
    config_from_parameters,
    emit_csv,
    run_experiment,
)
from utils.run_store import RunStore
from utils.runtime_config import (
    PARAMETER_KINDS,
    add_parameter_args,
    add_runtime_args,
    experiment_options_from_args,
    format_value,
    load_config_file,
    resolve_parameters,
)
from utils.trace_logger import TrialTraceLogger


logger = logging.getLogger("MatvecLab-CLI")

EXIT_PASS = 0
EXIT_ACCEPTANCE_FAILURE = 1
EXIT_CONFIG_ERROR = 2

DEFAULT_RESULTS_DIR = Path("results")

load_dotenv()


def build_parser():
    """
    Build the argument parser with one subcommand per experiment.

    Returns:
        argparse.ArgumentParser
    """
    import argparse

    parser = argparse.ArgumentParser(
        prog = "matvec_lab",
        description = "Matrix-vector query experiments for Krylov low-rank approximation",
    )
    subparsers = parser.add_subparsers(dest = "command", required = True)

    for experiment in EXPERIMENTS:
        sub = subparsers.add_parser(experiment, help = f"Run the {experiment} experiment")
        add_runtime_args(sub)
        add_parameter_args(sub)

    show = subparsers.add_parser("show-config", help = "Print resolved defaults per experiment")
    show.add_argument(
        "experiment",
        nargs = "?",
        choices = EXPERIMENTS,
        help = "Limit the listing to one experiment",
    )
    show.add_argument(
        "--config",
        dest = "config",
        default = None,
        help = "Flat key=value file to resolve against.",
    )
    return parser


def show_config(args: Any) -> int:
    """Print key=value lines of every resolved parameter, one block per experiment."""
    file_values = load_config_file(args.config)
    experiments = [args.experiment] if args.experiment else list(EXPERIMENTS)
    for index, experiment in enumerate(experiments):
        if index:
            print()
        print(f"[{experiment}]")
        parameters = resolve_parameters(args, file_values, DEFAULTS[experiment])
        for key in PARAMETER_KINDS:
            value = parameters.get(key)
            if value is not None:
                print(f"{key}={format_value(value)}")
    return EXIT_PASS


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level = getattr(logging, level, logging.INFO),
        format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers = [logging.StreamHandler()]
    )


def run_command(args: Any) -> int:
    """Resolve options, run one experiment, write CSV and the run log."""
    experiment = args.command
    options = experiment_options_from_args(args, experiment, DEFAULTS[experiment])
    _configure_logging(options.log_level)

    config = config_from_parameters(
        experiment,
        options.parameters,
        out = options.out,
        threads = options.threads,
    )
    tracer = TrialTraceLogger(enabled = options.trace)
    store = RunStore(
        enabled = options.save_run,
        experiment = experiment,
        run_dir = options.run_dir,
        options = {**options.as_dict(), "config": config.as_dict()},
    )

    result = run_experiment(config, tracer = tracer, store = store)

    csv_path = None
    if experiment != "gen-instance":
        csv_path = options.out or DEFAULT_RESULTS_DIR / f"{experiment}.csv"
        rows = list(result.rows) + aggregate_rows(result.rows)
        emit_csv(rows, csv_path)
        logger.info(f"{len(rows)} rows written to {csv_path}")

    store.record_summary(
        passed = result.passed,
        rows = len(result.rows),
        csv_path = csv_path,
        attempts = result.attempts,
    )
    if store.get_path():
        logger.info(f"Run saved: {store.get_path()}")

    logger.info("=" * 80)
    if result.passed:
        logger.info(f"{experiment}: all {len(result.checks)} acceptance checks passed")
        logger.info("=" * 80)
        return EXIT_PASS

    failed = [check.name for check in result.checks if not check.passed]
    logger.error(f"{experiment}: {len(failed)} acceptance check(s) failed: {', '.join(failed)}")
    logger.info("=" * 80)
    return EXIT_ACCEPTANCE_FAILURE


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main function to run the experiment CLI.
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        if args.command == "show-config":
            return show_config(args)
        return run_command(args)
    except (ConfigError, DivisibilityError, UnknownStrategy) as exc:
        _configure_logging("INFO")
        logger.error(f"Configuration error: {exc}")
        return EXIT_CONFIG_ERROR
    except ResultWriteError as exc:
        _configure_logging("INFO")
        logger.error(f"Cannot write results: {exc}")
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
