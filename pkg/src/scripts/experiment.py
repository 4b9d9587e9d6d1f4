"""Script to run a full experiment sweep from a JSON config file.

Flags override the file; without a file the desk-scale defaults are used.
"""

import argparse
import logging
import sys

from src.config import get_settings
from src.exceptions import InvalidParameterError
from src.repositories.results_repo import emit_report
from src.schemas.experiment import ExperimentConfig
from src.scripts.common import parse_floats
from src.services.pipeline import run_experiment

logger = logging.getLogger(__name__)


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="ExperimentConfig JSON file")
    parser.add_argument(
        "--full-scale", action="store_true", help="Start from the full-size preset"
    )
    parser.add_argument("--mode", choices=("synthetic", "newsvendor"), default=None)
    parser.add_argument("--epsilons", default=None, help="Comma-separated epsilon grid")
    parser.add_argument("--deltas", default=None, help="Comma-separated delta grid")
    parser.add_argument("--replications", type=int, default=None)
    parser.add_argument("--methods", default=None, help="Subset of fused,stl,dp")
    parser.add_argument("--master-seed", type=int, default=None)
    parser.add_argument("--n-jobs", type=int, default=None)
    parser.add_argument("--output-dir", default=None)


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """File (or preset) values, then flag overrides, validated once at the end."""
    if args.config:
        try:
            cfg = ExperimentConfig.load(args.config)
        except OSError as e:
            raise InvalidParameterError(f"cannot read config {args.config}: {e}") from e
    elif args.full_scale:
        cfg = ExperimentConfig.full_scale()
    else:
        settings = get_settings()
        cfg = ExperimentConfig(
            master_seed=settings.master_seed,
            n_jobs=settings.n_jobs,
            output_dir=f"{settings.output_dir}/experiment",
        )

    overrides = {
        "mode": args.mode,
        "epsilons": parse_floats(args.epsilons) if args.epsilons else None,
        "deltas": parse_floats(args.deltas) if args.deltas else None,
        "replications": args.replications,
        "methods": tuple(m.strip() for m in args.methods.split(",")) if args.methods else None,
        "master_seed": args.master_seed,
        "n_jobs": args.n_jobs,
        "output_dir": args.output_dir,
    }
    updates = {k: v for k, v in overrides.items() if v is not None}
    # model_copy skips validation
    return ExperimentConfig.model_validate({**cfg.model_dump(), **updates})


def run(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    logger.info(f"--- Step 1: Running {cfg.mode} experiment ---")
    table = run_experiment(cfg)
    failed = int((table["status"] == "error").sum())
    if failed:
        logger.warning(f"{failed} of {len(table)} rows failed; see the error column")

    logger.info("--- Step 2: Writing report ---")
    paths = emit_report(table, cfg.output_dir)
    for name, path in paths.items():
        logger.info(f"{name}: {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    """Main entry point for experiment sweeps."""
    parser = argparse.ArgumentParser(description="Run an experiment sweep")
    add_arguments(parser)
    return run(parser.parse_args(argv if argv is not None else []))


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
    sys.exit(main(sys.argv[1:]))
