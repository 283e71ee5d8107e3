import argparse
import json
import logging
import sys

from pydantic import ValidationError

from app.cli import convergence, pat, simulate, spectra
from app.core.errors import WaveSolverError
from app.core.logging import configure_logging
from app.schemas.config import load_run_config

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wadg-wave",
        description="High-order DG solver for coupled elastic-acoustic waves",
    )
    parser.add_argument("--config", help="JSON run configuration; flags override its values")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (simulate, convergence, spectra, pat):
        command.add_parser(subparsers)
    return parser


def main(argv: list[str] | None = None) -> int:
    """Run one subcommand; solver, config and file errors exit with status 2."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        config = load_run_config(args.config)
        summary = args.handler(args, config)
    except (WaveSolverError, ValidationError, FileNotFoundError, json.JSONDecodeError) as e:
        message = " ".join(str(e).split())
        logger.debug(f"{args.command} failed", exc_info=True)
        print(f"wadg-wave {args.command}: {type(e).__name__}: {message}", file=sys.stderr)
        return 2
    print(summary.model_dump_json(indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
