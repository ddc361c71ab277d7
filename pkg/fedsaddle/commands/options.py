"""Experiment flags shared by subcommands and config-file merging."""

import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import dotenv_values
from pydantic import ValidationError

from fedsaddle.config import settings
from fedsaddle.errors import ConfigError
from fedsaddle.models import Algorithm, ExperimentConfig, PartitionMode, PhiMode, ProblemKind

logger = logging.getLogger(__name__)


def _choices(enum) -> List[str]:
    return [member.value for member in enum]


def add_experiment_arguments(parser: argparse.ArgumentParser) -> None:
    """
    Register every ExperimentConfig flag.

    Flags default to SUPPRESS so only values given on the command line reach
    the namespace and can override the config file.
    """
    hidden = argparse.SUPPRESS
    parser.add_argument("--config", type=Path, default=None, help="Flat key=value config file")
    parser.add_argument(
        "--output-dir", type=Path, default=None, help="Output directory (default: FEDSADDLE_OUTPUT_DIR)"
    )

    group = parser.add_argument_group("experiment")
    group.add_argument("--problem", choices=_choices(ProblemKind), default=hidden)
    group.add_argument("--algo", choices=_choices(Algorithm), default=hidden)
    group.add_argument("--data", type=Path, default=hidden, help="LIBSVM dataset path")
    group.add_argument("--partition", choices=_choices(PartitionMode), default=hidden)
    group.add_argument("--M", type=int, default=hidden, help="Total clients")
    group.add_argument("--m", type=int, default=hidden, help="Clients sampled per round")
    group.add_argument("--K", type=int, default=hidden, help="Local steps per round")
    group.add_argument("--T", type=int, default=hidden, help="Communication rounds")
    group.add_argument("--batch", type=int, default=hidden)
    group.add_argument("--eta-xl", dest="eta_xl", type=float, default=hidden)
    group.add_argument("--eta-yl", dest="eta_yl", type=float, default=hidden)
    group.add_argument("--eta-xg", dest="eta_xg", type=float, default=hidden)
    group.add_argument("--eta-yg", dest="eta_yg", type=float, default=hidden)
    group.add_argument("--seed", type=int, default=hidden)
    group.add_argument("--eval-every", dest="eval_every", type=int, default=hidden)
    group.add_argument("--smooth-window", dest="smooth_window", type=int, default=hidden)
    group.add_argument("--init-scale", dest="init_scale", type=float, default=hidden)
    group.add_argument(
        "--no-control-variates", dest="control_variates", action="store_false", default=hidden
    )
    group.add_argument("--workers", type=int, default=hidden, help="Client thread pool size")

    phi = parser.add_argument_group("phi estimator")
    phi.add_argument("--phi-mode", dest="phi_mode", choices=_choices(PhiMode), default=hidden)
    phi.add_argument("--phi-max-inner-steps", dest="phi_max_inner_steps", type=int, default=hidden)
    phi.add_argument("--phi-inner-step", dest="phi_inner_step", type=float, default=hidden)
    phi.add_argument("--phi-tol", dest="phi_tol", type=float, default=hidden)

    data = parser.add_argument_group("dataset")
    data.add_argument("--per-class", dest="per_class", type=int, default=hidden)
    data.add_argument("--positive-label", dest="positive_label", type=float, default=hidden)

    problem = parser.add_argument_group("problem")
    problem.add_argument("--lambda2", type=float, default=hidden)
    problem.add_argument("--alpha", type=float, default=hidden)
    problem.add_argument("--d", type=int, default=hidden, help="Synthetic dimension")
    problem.add_argument("--mu", type=float, default=hidden, help="PL modulus")
    problem.add_argument("--h", type=float, default=hidden, help="Synthetic heterogeneity scale")
    problem.add_argument("--sigma-x", dest="sigma_x", type=float, default=hidden)
    problem.add_argument("--sigma-y", dest="sigma_y", type=float, default=hidden)


def read_config_file(path: Path) -> Dict[str, str]:
    """
    Read a flat key=value file; dashes in keys become underscores.

    Raises:
        ConfigError: If the file is missing or a key has no value
    """
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for key, value in dotenv_values(path).items():
        if value is None:
            raise ConfigError(f"{path}: key {key!r} has no value")
        values[key.replace("-", "_")] = value
    return values


def format_validation_error(error: ValidationError) -> str:
    """One-line description of the first validation problem."""
    first = error.errors()[0]
    location = ".".join(str(part) for part in first["loc"])
    message = first["msg"]
    return f"{location}: {message}" if location else message


def resolve_experiment(
    args: argparse.Namespace, defaults: Optional[Dict[str, Any]] = None
) -> ExperimentConfig:
    """
    Merge process settings, defaults, the config file and flags (flags win).

    Raises:
        ConfigError: If the merged values do not form a valid configuration
    """
    values: Dict[str, Any] = {"workers": settings.workers, **(defaults or {})}
    if getattr(args, "config", None) is not None:
        values.update(read_config_file(args.config))
    for name in ExperimentConfig.model_fields:
        if name in vars(args):
            values[name] = getattr(args, name)

    if "T" not in values:
        raise ConfigError("--T is required")
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigError(format_validation_error(e)) from e


def output_dir(args: argparse.Namespace) -> Path:
    """Directory for output files: --output-dir, else the process setting."""
    directory = getattr(args, "output_dir", None) or settings.output_dir
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def parse_int_list(text: str) -> List[int]:
    """Comma-separated integers, as used by sweep flags."""
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def parse_algorithms(text: str) -> List[Algorithm]:
    """Comma-separated algorithm names."""
    try:
        return [Algorithm(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"unknown algorithm in {text!r}") from e
