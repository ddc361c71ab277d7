"""Command-line entry point."""

import argparse
import logging
import sys
from typing import List, Optional

from fedsaddle import __version__
from fedsaddle.commands import check_lr, parse_only, run, speedup, sweep
from fedsaddle.config import LogLevel, settings
from fedsaddle.errors import FedSaddleError

logger = logging.getLogger(__name__)

COMMANDS = (run, sweep, speedup, check_lr, parse_only)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedsaddle",
        description="Federated min-max optimization experiments",
        allow_abbrev=False,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        dest="log_level",
        choices=[level.value for level in LogLevel],
        default=settings.log_level.value,
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments and dispatch to a subcommand.

    Returns:
        0 on success, 1 on a reported error; argparse exits with 2 on usage errors
    """
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        return args.handler(args)
    except (FedSaddleError, OSError) as e:
        logger.debug("Command failed", exc_info=True)
        reason = str(e).splitlines()[0] if str(e) else type(e).__name__
        print(f"error: {reason}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
