"""Script to emit a synthetic dataset as CSV.

Either the (epsilon, delta)-related quantile-regression tasks or the
bakery-like store demand fixture; the true coefficients go to a second file.
"""

import argparse
import logging
import sys
from pathlib import Path

from src.repositories.results_repo import write_dataset_csv
from src.schemas.truth import RelatednessSpec
from src.scripts.common import write_matrix
from src.services.datagen import (
    COVARIATE_NAMES,
    generate_bakery_fixture,
    generate_quantile_tasks,
    generate_related_coefficients,
)

logger = logging.getLogger(__name__)


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output", required=True, help="Dataset CSV to write")
    parser.add_argument("--bakery", action="store_true", help="Emit the store demand fixture")
    parser.add_argument("--seed", type=int, default=0)

    related = parser.add_argument_group("related tasks")
    related.add_argument("--m", type=int, default=20)
    related.add_argument("--n", type=int, default=100)
    related.add_argument("--dim", type=int, default=10)
    related.add_argument("--epsilon", type=float, default=0.0)
    related.add_argument("--delta", type=float, default=0.0)
    related.add_argument("--tau", type=float, default=0.9)
    related.add_argument("--noise-sd", type=float, default=0.5)
    related.add_argument("--signal", type=float, default=2.0)

    bakery = parser.add_argument_group("store demand fixture")
    bakery.add_argument("--stores", type=int, default=8)
    bakery.add_argument("--months", type=int, default=6)
    bakery.add_argument("--start", default="2018-07-01")
    bakery.add_argument("--heterogeneity", type=float, default=0.2)


def truth_path(output: str | Path) -> Path:
    output = Path(output)
    return output.with_name(f"{output.stem}_truth.csv")


def run(args: argparse.Namespace) -> int:
    if args.bakery:
        fixture = generate_bakery_fixture(
            stores=args.stores,
            months=args.months,
            start=args.start,
            heterogeneity=args.heterogeneity,
            seed=args.seed,
        )
        data, coefficients = fixture.data, fixture.coefficients
        names = list(COVARIATE_NAMES[1:])
    else:
        truth = generate_related_coefficients(
            RelatednessSpec(
                m=args.m,
                epsilon=args.epsilon,
                delta=args.delta,
                dim=args.dim,
                signal=args.signal,
                tau=args.tau,
                noise_sd=args.noise_sd,
                seed=args.seed,
            )
        )
        data, coefficients = generate_quantile_tasks(truth, args.n), truth.theta_star
        names = None
        logger.info(f"Outlier tasks: {list(truth.outliers)}")

    schema = write_dataset_csv(data, args.output, names)
    write_matrix(coefficients, data.task_ids, truth_path(args.output))
    logger.info(f"Covariate columns: {', '.join(schema.covariate_columns)}")
    return 0


def main(argv: list[str] | None = None) -> int:
    """Main entry point for dataset generation."""
    parser = argparse.ArgumentParser(description="Generate a synthetic multi-task dataset")
    add_arguments(parser)
    return run(parser.parse_args(argv if argv is not None else []))


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
    sys.exit(main(sys.argv[1:]))
