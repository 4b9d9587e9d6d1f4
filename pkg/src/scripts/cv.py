"""Script to tune the fusion penalty by k-fold or time-ordered holdout CV."""

import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

from src.config import get_settings
from src.schemas.experiment import CvPlan, CvReport
from src.scripts.common import (
    add_data_arguments,
    add_loss_argument,
    load_data,
    loss_from_args,
    parse_floats,
    write_matrix,
)
from src.services.tuning import holdout_cv, kfold_cv

logger = logging.getLogger(__name__)


def add_arguments(parser: argparse.ArgumentParser) -> None:
    settings = get_settings()
    add_data_arguments(parser)
    add_loss_argument(parser)
    parser.add_argument("--scheme", choices=("kfold", "holdout"), default="kfold")
    parser.add_argument("--c-grid", default=settings.c_grid, help="Comma-separated C values")
    parser.add_argument("--folds", type=int, default=settings.cv_folds)
    parser.add_argument("--fraction", type=float, default=settings.holdout_fraction)
    parser.add_argument("--seed", type=int, default=0, help="Fold assignment seed")
    parser.add_argument("--output-dir", default=None, help="Directory for scores and refit")


def scores_frame(report: CvReport) -> pd.DataFrame:
    """One row per grid point: C, lambda, mean score and per-fold scores."""
    frame = pd.DataFrame(
        {"c": report.c_grid, "lambda": report.lambdas, "mean_score": report.mean_scores}
    )
    for k in range(len(report.fold_scores[0])):
        frame[f"fold_{k + 1}"] = [row[k] for row in report.fold_scores]
    frame["chosen"] = [c == report.chosen_c for c in report.c_grid]
    return frame


def run(args: argparse.Namespace) -> int:
    data = load_data(args)
    spec = loss_from_args(args)
    plan = CvPlan(
        c_grid=parse_floats(args.c_grid),
        folds=args.folds,
        holdout_fraction=args.fraction,
        seed=args.seed,
    )
    select = kfold_cv if args.scheme == "kfold" else holdout_cv
    report = select(data, spec, plan)
    logger.info(f"Chosen C={report.chosen_c:g}, lambda={report.chosen_lambda:.6g}")
    if report.failed:
        logger.warning(f"Grid points that failed to fit: {list(report.failed)}")

    if args.output_dir:
        out_dir = Path(args.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        scores_frame(report).to_csv(
            out_dir / "cv_scores.csv",
            index=False,
            float_format="%.17g",
            encoding="utf-8",
            lineterminator="\n",
        )
        write_matrix(report.refit.theta_hat, data.task_ids, out_dir / "refit.csv")
        logger.info(f"CV report written to {out_dir}")
    return 0


def main(argv: list[str] | None = None) -> int:
    """Main entry point for penalty tuning."""
    parser = argparse.ArgumentParser(description="Cross-validate the fusion penalty")
    add_arguments(parser)
    return run(parser.parse_args(argv if argv is not None else []))


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
    sys.exit(main(sys.argv[1:]))
