"""`speedup` subcommand: rounds-to-threshold matrix over (m, K)."""

import argparse
import logging

from fedsaddle.commands.options import (
    add_experiment_arguments,
    output_dir,
    parse_int_list,
    resolve_experiment,
)
from fedsaddle.services.experiment import config_echo
from fedsaddle.services.results import write_speedup_csv
from fedsaddle.services.sweep import speedup_sweep

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "speedup", help="Rounds needed to reach a gradient threshold per (m, K)", allow_abbrev=False
    )
    add_experiment_arguments(parser)
    parser.add_argument("--m-values", dest="m_values", type=parse_int_list, required=True)
    parser.add_argument("--K-values", dest="K_values", type=parse_int_list, required=True)
    parser.add_argument("--threshold", type=float, required=True, help="Target smoothed ||grad Phi||^2")
    parser.add_argument("--seeds", type=parse_int_list, default=None, help="Seeds averaged per cell")
    parser.add_argument(
        "--scale-local-rates",
        dest="scale_local_rates",
        action="store_true",
        help="Keep eta_l * K at its base value across K",
    )
    parser.add_argument("--name", default="speedup", help="Output file stem")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    base = resolve_experiment(args)
    cells = speedup_sweep(
        base,
        args.m_values,
        args.K_values,
        args.threshold,
        seeds=args.seeds,
        scale_local_rates=args.scale_local_rates,
    )

    echo = config_echo(base)
    echo["threshold"] = repr(args.threshold)
    echo["seeds"] = ",".join(str(seed) for seed in (args.seeds or [base.seed]))
    path = write_speedup_csv(cells, args.m_values, args.K_values, output_dir(args) / f"{args.name}.csv", echo)

    for cell in cells:
        reached = "failed" if cell.status == "failed" else cell.rounds_to_threshold
        print(f"m={cell.m} K={cell.K}: {'none' if reached is None else reached}")
    print(f"matrix: {path}")
    return 0
