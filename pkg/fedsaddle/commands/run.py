"""`run` subcommand: one experiment to a CSV and a summary file."""

import argparse
import logging

from fedsaddle.commands.options import add_experiment_arguments, output_dir, resolve_experiment
from fedsaddle.models import ExperimentConfig
from fedsaddle.services.experiment import run_experiment
from fedsaddle.services.results import write_csv, write_summary

logger = logging.getLogger(__name__)


def default_run_name(config: ExperimentConfig) -> str:
    """File stem identifying problem, algorithm, participation and seed."""
    return f"{config.problem.value}_{config.algo.value}_M{config.M}_m{config.m}_K{config.K}_seed{config.seed}"


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "run", help="Run one experiment and write its CSV and summary", allow_abbrev=False
    )
    add_experiment_arguments(parser)
    parser.add_argument("--name", default=None, help="Output file stem")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = resolve_experiment(args)
    result = run_experiment(config)

    name = args.name or default_run_name(config)
    directory = output_dir(args)
    csv_path = write_csv(result.records, directory / f"{name}.csv", config.smooth_window, result.echo)
    summary_path = write_summary(result.summary, directory / f"{name}_summary.txt", result.echo)

    print(f"csv: {csv_path}")
    print(f"summary: {summary_path}")
    print(f"final grad_norm_phi_sq: {result.summary.final_grad_norm_phi_sq!r}")
    return 0
