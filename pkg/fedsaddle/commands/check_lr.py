"""`check-lr` subcommand: learning-rate conditions of the convergence theorems."""

import argparse
import logging

from fedsaddle.commands.options import add_experiment_arguments, output_dir, resolve_experiment
from fedsaddle.errors import ConfigError
from fedsaddle.models import Algorithm, LearningRates, ProblemConstants
from fedsaddle.services.lr_constraints import CHECKABLE, check_lr_constraints, format_report
from fedsaddle.services.problem_constants import estimate_constants
from fedsaddle.services.problem_factory import ProblemFactory
from fedsaddle.services.results import write_constraint_report
from fedsaddle.services.sampling import Purpose, RngStreams

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "check-lr", help="Check learning rates against the theorem conditions", allow_abbrev=False
    )
    parser.add_argument(
        "--which", type=Algorithm, choices=list(CHECKABLE), required=True, metavar="{sagda_i,sagda_ii,fsgda}"
    )
    parser.add_argument("--Lf", dest="lipschitz", type=float, default=None, help="Smoothness constant L_f")
    parser.add_argument(
        "--estimate", action="store_true", help="Estimate L_f from the configured problem (best-effort)"
    )
    parser.add_argument("--budget", type=int, default=16, help="Probe points used by --estimate")
    parser.add_argument("--output", default=None, help="JSON report path")
    add_experiment_arguments(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = resolve_experiment(args, defaults={"T": 0})

    if args.estimate:
        problem = ProblemFactory.create(config)
        rng = RngStreams(config.seed).stream(Purpose.ESTIMATION)
        lipschitz = estimate_constants(problem, args.budget, rng).lf_hat
    elif args.lipschitz is not None:
        lipschitz = args.lipschitz
    else:
        raise ConfigError("--Lf is required unless --estimate is given")

    rates = LearningRates(
        eta_xl=config.eta_xl, eta_yl=config.eta_yl, eta_xg=config.eta_xg, eta_yg=config.eta_yg
    )
    report = check_lr_constraints(
        args.which,
        ProblemConstants(lipschitz=lipschitz, mu=config.mu),
        rates,
        K=config.K,
        M=config.M,
        m=config.m,
        best_effort=args.estimate,
    )

    print(format_report(report))
    path = output_dir(args) / (args.output or f"constraints_{args.which.value}.json")
    write_constraint_report(report, path)
    print(f"report: {path}")
    return 0
