"""Estimation error against ground truth and average held-out loss."""

from collections.abc import Mapping

import numpy as np

from src.exceptions import InvalidParameterError, ShapeError
from src.schemas.dataset import MultiTaskDataset
from src.schemas.experiment import MetricsReport
from src.schemas.loss import LossSpec
from src.schemas.truth import GroundTruth
from src.services.losses import empirical_risk


def as_estimate_matrix(estimate, m: int) -> np.ndarray:
    """d x m estimate matrix; a single vector (DP) is repeated for every task."""
    estimate = np.asarray(estimate, dtype=float)
    if estimate.ndim == 1:
        return np.tile(estimate[:, None], (1, m))
    return estimate


def _max_error(errors: np.ndarray, index) -> float | None:
    index = list(index)
    if not index:
        return None
    return float(np.max(errors[index]))


def evaluate_metrics(
    estimates: Mapping[str, np.ndarray],
    truth: GroundTruth | None = None,
    test: MultiTaskDataset | None = None,
    spec: LossSpec | None = None,
) -> dict[str, MetricsReport]:
    """Metrics of every method's d x m estimate.

    With ``truth``: max_j ||theta_hat_j - theta*_j|| over all tasks, over S
    and over S^c (None when that set is empty). With ``test`` (and the loss
    ``spec``): the mean over tasks of the empirical risk on held-out samples.
    """
    if truth is None and test is None:
        raise InvalidParameterError("need ground truth, test data or both")
    if test is not None and spec is None:
        raise InvalidParameterError("test-loss metrics need the loss spec")

    reports = {}
    for method, estimate in estimates.items():
        fields: dict = {"method": method}
        if truth is not None:
            d, m = truth.theta_star.shape
            theta = as_estimate_matrix(estimate, m)
            if theta.shape != (d, m):
                raise ShapeError(
                    f"{method}: estimate has shape {theta.shape}, truth ({d}, {m})"
                )
            errors = np.linalg.norm(theta - truth.theta_star, axis=0)
            fields["max_error_all"] = float(np.max(errors))
            fields["max_error_S"] = _max_error(errors, truth.inliers)
            fields["max_error_Sc"] = _max_error(errors, truth.outliers)
        if test is not None:
            theta = as_estimate_matrix(estimate, test.m)
            if theta.shape != (test.d, test.m):
                raise ShapeError(
                    f"{method}: estimate has shape {theta.shape}, "
                    f"test data ({test.d}, {test.m})"
                )
            risks = [
                empirical_risk(spec, theta[:, j], task) for j, task in enumerate(test.tasks)
            ]
            fields["avg_test_loss"] = float(np.mean(risks))
        reports[method] = MetricsReport(**fields)
    return reports
