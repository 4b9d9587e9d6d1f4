"""Script to fit one estimator (fused, STL or DP) on a CSV dataset."""

import argparse
import logging
import sys

import numpy as np

from src.schemas.solver import FusionConfig
from src.scripts.common import (
    add_data_arguments,
    add_loss_argument,
    load_data,
    loss_from_args,
    parse_floats,
    write_matrix,
)
from src.services.pipeline import as_estimate_matrix
from src.services.solver import objective_value, solve_dp, solve_fused, solve_stl
from src.services.tuning import lambda_grid

logger = logging.getLogger(__name__)


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_data_arguments(parser)
    add_loss_argument(parser)
    parser.add_argument("--method", choices=("fused", "stl", "dp"), default="fused")
    penalty = parser.add_mutually_exclusive_group()
    penalty.add_argument(
        "--lambda", dest="lam", default=None, help="Penalty, or one per task comma-separated"
    )
    penalty.add_argument("--c", type=float, default=None, help="Penalty as C sqrt(d / n)")
    parser.add_argument("--weights", default=None, help="Task weights w_j (comma-separated)")
    parser.add_argument("--output", default=None, help="CSV for the estimated coefficients")


def _penalty(args: argparse.Namespace, d: int, n: float) -> float | tuple[float, ...]:
    if args.c is not None:
        return lambda_grid(d, n, [args.c])[0]
    if args.lam is None:
        return 0.0
    values = parse_floats(args.lam)
    return values[0] if len(values) == 1 else values


def run(args: argparse.Namespace) -> int:
    data = load_data(args)
    spec = loss_from_args(args)
    weights = parse_floats(args.weights) if args.weights else None
    if weights is not None and len(weights) == 1:
        weights = weights[0]
    config = FusionConfig(
        weights=weights, penalties=_penalty(args, data.d, float(np.mean(data.sizes)))
    )
    logger.info(f"Fitting {args.method} on m={data.m}, d={data.d} with {spec.kind} loss")

    if args.method == "fused":
        solution = solve_fused(data, spec, config)
        theta = solution.theta_hat
        logger.info(
            f"Objective {solution.objective:.10g}, "
            f"{sum(solution.pooled_mask)}/{data.m} tasks pooled, "
            f"{solution.diagnostics.iterations} iterations"
        )
    else:
        if args.method == "stl":
            theta = np.column_stack([solve_stl(task, spec, config) for task in data.tasks])
        else:
            theta = as_estimate_matrix(solve_dp(data, spec, config=config), data.m)
        w, lam = config.resolve_weights(data.m), config.resolve_penalties(data.m)
        objective = objective_value(data, spec, w, lam, theta, theta.mean(axis=1))
        logger.info(f"Fused objective at the {args.method} estimate: {objective:.10g}")

    if args.output:
        write_matrix(theta, data.task_ids, args.output)
        logger.info(f"Coefficients written to {args.output}")
    return 0


def main(argv: list[str] | None = None) -> int:
    """Main entry point for a single fit."""
    parser = argparse.ArgumentParser(description="Fit a fused, STL or DP estimator")
    add_arguments(parser)
    return run(parser.parse_args(argv if argv is not None else []))


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
    sys.exit(main(sys.argv[1:]))
