"""Main entry point for the adaptive data fusion command line.

Subcommands:
1. synth       - emit a synthetic dataset CSV.
2. fit         - one fused / STL / DP fit from a CSV.
3. cv          - penalty tuning report.
4. experiment  - full sweep from a config file.
5. newsvendor  - windowed newsvendor study.

Exit codes: 0 success, 2 config error, 3 data error, 4 convergence failure.
"""

import argparse
import json
import logging
import sys

from pydantic import ValidationError

from src.config import get_settings
from src.exceptions import (
    ConvergenceError,
    InvalidInputError,
    InvalidParameterError,
    ShapeError,
)
from src.scripts import cv, experiment, fit, newsvendor, synth

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4

COMMANDS = {
    "synth": (synth, "Generate a synthetic dataset CSV"),
    "fit": (fit, "Fit fused, STL or DP on a CSV dataset"),
    "cv": (cv, "Tune the fusion penalty"),
    "experiment": (experiment, "Run an experiment sweep"),
    "newsvendor": (newsvendor, "Run the windowed newsvendor study"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m src.main", description="Adaptive data fusion for multi-task learning"
    )
    parser.add_argument("--log-level", default=None, help="Overrides FUSION_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (module, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text, description=help_text)
        module.add_arguments(sub)
        sub.set_defaults(handler=module.run)
    return parser


def exit_code_for(error: Exception) -> int:
    """Map an exception to the documented exit code (1 for anything unexpected)."""
    if isinstance(error, ConvergenceError):
        return EXIT_CONVERGENCE
    if isinstance(error, (InvalidInputError, ShapeError, OSError)):
        return EXIT_DATA
    if isinstance(error, (InvalidParameterError, ValidationError, json.JSONDecodeError)):
        return EXIT_CONFIG
    return 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (args.log_level or get_settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s - %(levelname)s - %(message)s",
    )

    try:
        logger.info(f"=== Starting {args.command} ===")
        code = args.handler(args)
        logger.info(f"=== {args.command} completed successfully ===")
        return code
    except Exception as e:
        code = exit_code_for(e)
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return code


if __name__ == "__main__":
    sys.exit(main())
