"""Script to run the windowed newsvendor study.

Reads a dated store-demand CSV (or generates the bakery-like fixture), fits
fused, STL and DP order rules on trailing k-month windows and scores them on
the fixed test month.
"""

import argparse
import logging
import sys

from src.config import get_settings
from src.repositories.results_repo import emit_report
from src.schemas.experiment import CvPlan, ExperimentConfig, NewsvendorConfig
from src.scripts.common import add_data_arguments, parse_floats, parse_ints, schema_from_args
from src.services.pipeline import run_experiment

logger = logging.getLogger(__name__)


def add_arguments(parser: argparse.ArgumentParser) -> None:
    settings = get_settings()
    add_data_arguments(parser, time_column="date")
    parser.add_argument("--months", default="1,2,3", help="Training window lengths")
    parser.add_argument("--test-start", default=None, help="First test day (ISO date)")
    parser.add_argument("--b", type=float, default=9.0, help="Backorder cost")
    parser.add_argument("--h", type=float, default=1.0, help="Holding cost")
    parser.add_argument("--c-grid", default=settings.c_grid)
    parser.add_argument("--fraction", type=float, default=settings.holdout_fraction)
    parser.add_argument("--methods", default="fused,stl,dp")
    parser.add_argument("--seed", type=int, default=settings.master_seed)
    parser.add_argument("--output-dir", default=f"{settings.output_dir}/newsvendor")

    fixture = parser.add_argument_group("fixture (used without --data)")
    fixture.add_argument("--stores", type=int, default=8)
    fixture.add_argument("--fixture-months", type=int, default=6)
    fixture.add_argument("--heterogeneity", type=float, default=0.2)


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        mode="newsvendor",
        methods=tuple(m.strip() for m in args.methods.split(",")),
        cv=CvPlan(c_grid=parse_floats(args.c_grid), holdout_fraction=args.fraction),
        newsvendor=NewsvendorConfig(
            data_path=args.data,
            ingest=schema_from_args(args) if args.data else None,
            months=parse_ints(args.months),
            test_start=args.test_start,
            b=args.b,
            h=args.h,
            fixture_stores=args.stores,
            fixture_months=args.fixture_months,
            fixture_heterogeneity=args.heterogeneity,
        ),
        master_seed=args.seed,
        output_dir=args.output_dir,
    )


def run(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    source = cfg.newsvendor.data_path or "bakery fixture"
    logger.info(f"--- Step 1: Windowed fits on {source} ---")
    table = run_experiment(cfg)

    logger.info("--- Step 2: Writing report ---")
    paths = emit_report(table, cfg.output_dir)
    for name, path in paths.items():
        logger.info(f"{name}: {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    """Main entry point for the newsvendor study."""
    parser = argparse.ArgumentParser(description="Windowed newsvendor study")
    add_arguments(parser)
    return run(parser.parse_args(argv if argv is not None else []))


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
    sys.exit(main(sys.argv[1:]))
