"""Penalty selection over lambda = C sqrt(d / n).

Both selectors score a grid point by the validation empirical risk averaged
with equal weight over tasks (and over folds for k-fold), pick the smallest
score (ties go to the smaller C, then to the earlier grid entry) and refit on
all data. Fold fits use the lambda of their own training size, so C is what
carries over to the refit.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np
from joblib import Parallel, delayed
from sklearn.model_selection import KFold

from src.exceptions import ConvergenceError, FusionError, InvalidInputError
from src.schemas.dataset import MultiTaskDataset
from src.schemas.experiment import CvPlan, CvReport
from src.schemas.loss import LossSpec
from src.schemas.solver import FusionConfig, FusionSolution
from src.services.losses import empirical_risk
from src.services.solver import solve_fused

logger = logging.getLogger(__name__)

Split = tuple[MultiTaskDataset, MultiTaskDataset]


def lambda_grid(d: int, n: float, c_grid: Sequence[float]) -> list[float]:
    """C sqrt(d / n) for every C."""
    scale = math.sqrt(d / n)
    return [float(c) * scale for c in c_grid]


def _typical_size(data: MultiTaskDataset) -> float:
    return float(np.mean(data.sizes))


def _fit(data: MultiTaskDataset, spec: LossSpec, config: FusionConfig) -> FusionSolution:
    try:
        return solve_fused(data, spec, config)
    except ConvergenceError as e:
        if e.best_iterate is None:
            raise
        logger.warning(f"using best iterate after non-convergence: {e}")
        return e.best_iterate


def _score(
    split: Split, spec: LossSpec, config: FusionConfig, c: float
) -> float:
    train, validation = split
    lam = lambda_grid(train.d, _typical_size(train), [c])[0]
    try:
        solution = _fit(train, spec, config.with_penalty(lam))
    except FusionError as e:
        logger.warning(f"fit at C={c:g} failed: {e}")
        return math.inf
    risks = [
        empirical_risk(spec, solution.theta_hat[:, j], task)
        for j, task in enumerate(validation.tasks)
    ]
    return float(np.mean(risks))


def _select(
    data: MultiTaskDataset,
    spec: LossSpec,
    plan: CvPlan,
    splits: list[Split],
    config: FusionConfig,
) -> CvReport:
    grid = list(plan.c_grid)
    jobs = [(c, split) for c in grid for split in splits]
    scores = Parallel(n_jobs=config.n_jobs, prefer="threads")(
        delayed(_score)(split, spec, config, c) for c, split in jobs
    )
    k = len(splits)
    fold_scores = [tuple(scores[i * k : (i + 1) * k]) for i in range(len(grid))]
    means = [
        float(np.mean(row)) if all(map(math.isfinite, row)) else math.inf
        for row in fold_scores
    ]
    failed = tuple(c for c, mean in zip(grid, means) if not math.isfinite(mean))
    if len(failed) == len(grid):
        raise InvalidInputError("every grid point failed to fit; no penalty can be chosen")

    best = min(range(len(grid)), key=lambda i: (means[i], grid[i], i))
    chosen_c = grid[best]
    lambdas = lambda_grid(data.d, _typical_size(data), grid)
    logger.info(
        f"chosen C={chosen_c:g} (lambda={lambdas[best]:.6g}), score {means[best]:.6g}"
    )
    refit = _fit(data, spec, config.with_penalty(lambdas[best]))
    return CvReport(
        c_grid=tuple(grid),
        lambdas=tuple(lambdas),
        mean_scores=tuple(means),
        fold_scores=tuple(fold_scores),
        chosen_c=chosen_c,
        chosen_lambda=lambdas[best],
        refit=refit,
        failed=failed,
    )


def kfold_splits(data: MultiTaskDataset, folds: int, seed: int) -> list[Split]:
    """Within-task shuffled folds; fold k of every task is validated together."""
    per_task = []
    for j, task in enumerate(data.tasks):
        if task.n < folds:
            raise InvalidInputError(
                f"task {task.task_id!r} has {task.n} samples, fewer than {folds} folds"
            )
        state = int(np.random.SeedSequence(seed, spawn_key=(j,)).generate_state(1)[0])
        splitter = KFold(n_splits=folds, shuffle=True, random_state=state)
        per_task.append(list(splitter.split(task.covariates)))

    splits = []
    for k in range(folds):
        train = [task.subset(per_task[j][k][0]) for j, task in enumerate(data.tasks)]
        validation = [task.subset(per_task[j][k][1]) for j, task in enumerate(data.tasks)]
        splits.append((data.replace_tasks(train), data.replace_tasks(validation)))
    return splits


def holdout_split(data: MultiTaskDataset, fraction: float) -> Split:
    """First ``fraction`` of each task (in sample order) for training, the rest for validation."""
    train, validation = [], []
    for task in data.tasks:
        cut = math.floor(round(fraction * task.n, 9))
        if cut < 1 or cut >= task.n:
            raise InvalidInputError(
                f"task {task.task_id!r}: {task.n} samples leave an empty "
                f"{'training' if cut < 1 else 'validation'} slice at fraction {fraction}"
            )
        train.append(task.subset(np.arange(cut)))
        validation.append(task.subset(np.arange(cut, task.n)))
    return data.replace_tasks(train), data.replace_tasks(validation)


def kfold_cv(
    data: MultiTaskDataset,
    spec: LossSpec,
    plan: CvPlan | None = None,
    config: FusionConfig | None = None,
) -> CvReport:
    """k-fold cross-validation of C, then a refit on all samples.

    Raises:
        InvalidInputError: a task has fewer samples than folds, or every
            grid point failed.
    """
    plan = plan or CvPlan()
    config = config or FusionConfig()
    splits = kfold_splits(data, plan.folds, plan.seed)
    return _select(data, spec, plan, splits, config)


def holdout_cv(
    data: MultiTaskDataset,
    spec: LossSpec,
    plan: CvPlan | None = None,
    config: FusionConfig | None = None,
) -> CvReport:
    """Time-ordered holdout: fit on the leading fraction, validate on the tail, refit."""
    plan = plan or CvPlan()
    config = config or FusionConfig()
    split = holdout_split(data, plan.holdout_fraction)
    return _select(data, spec, plan, [split], config)
