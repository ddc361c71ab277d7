"""`sweep` subcommand: grid over algorithm, m, K and seed."""

import argparse
import logging

from fedsaddle.commands.options import (
    add_experiment_arguments,
    output_dir,
    parse_algorithms,
    parse_int_list,
    resolve_experiment,
)
from fedsaddle.services.sweep import grid_sweep

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "sweep", help="Run a grid of experiments, one CSV per cell plus index.csv", allow_abbrev=False
    )
    add_experiment_arguments(parser)
    parser.add_argument("--algos", type=parse_algorithms, default=None, help="e.g. sagda_ii,fsgda")
    parser.add_argument("--m-values", dest="m_values", type=parse_int_list, default=None)
    parser.add_argument("--K-values", dest="K_values", type=parse_int_list, default=None)
    parser.add_argument("--seeds", type=parse_int_list, default=None)
    parser.add_argument("--name", default="sweep", help="Subdirectory of the output directory")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    base = resolve_experiment(args)
    algorithms = args.algos or [base.algo]
    m_values = args.m_values or [base.m]
    K_values = args.K_values or [base.K]
    seeds = args.seeds or [base.seed]

    out_dir = output_dir(args) / args.name
    results = grid_sweep(base, algorithms, m_values, K_values, seeds, out_dir)

    failed = sum(1 for cell in results if cell.status == "failed")
    print(f"cells: {len(results)} ok: {len(results) - failed} failed: {failed}")
    print(f"index: {out_dir / 'index.csv'}")
    return 0
