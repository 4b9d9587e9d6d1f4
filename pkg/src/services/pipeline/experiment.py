"""Experiment sweeps: the synthetic relatedness study and the windowed newsvendor study.

Every grid cell is independent and seeded by ``derive_seed``, so a cell can be
rerun alone and the table does not depend on ``n_jobs``.
"""

import hashlib
import logging
from collections.abc import Callable, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from src.config import get_settings
from src.exceptions import FusionError, InvalidInputError
from src.schemas.dataset import MultiTaskDataset
from src.schemas.experiment import (
    CvPlan,
    ExperimentConfig,
    Method,
    MetricsReport,
    NewsvendorConfig,
    ResultRow,
)
from src.schemas.loss import CheckLoss, LossSpec
from src.schemas.solver import FusionConfig
from src.schemas.truth import RelatednessSpec
from src.services.datagen import (
    generate_bakery_fixture,
    generate_quantile_tasks,
    generate_related_coefficients,
)
from src.services.losses import tau_from_costs
from src.services.pipeline.ingest import ingest_csv
from src.services.pipeline.metrics import evaluate_metrics
from src.services.pipeline.summary import results_frame
from src.services.solver import solve_dp, solve_stl
from src.services.tuning import holdout_cv, kfold_cv

logger = logging.getLogger(__name__)

_FAILURES = (FusionError, ValueError, RuntimeError, np.linalg.LinAlgError)


def derive_seed(master: int, *keys) -> int:
    """Stable 63-bit seed: SHA-256 of ``master`` and the keys' reprs, joined by '/'."""
    text = "/".join(repr(k) for k in (int(master), *keys))
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _solver_config(cfg: ExperimentConfig) -> FusionConfig:
    return FusionConfig(tol_abs=cfg.solver_tol_abs, tol_rel=cfg.solver_tol_rel, n_jobs=1)


def _show_progress() -> bool:
    return get_settings().log_level.upper() in ("DEBUG", "INFO")


def _fit_methods(
    methods: Sequence[Method],
    train: MultiTaskDataset,
    spec: LossSpec,
    config: FusionConfig,
    tune: Callable,
) -> tuple[dict[str, np.ndarray], dict[str, dict], dict[str, str]]:
    """Estimates, per-method row extras (lambda, C) and per-method errors."""
    estimates, extras, errors = {}, {}, {}
    for method in methods:
        try:
            if method == "fused":
                report = tune(train, spec, config)
                estimates[method] = report.refit.theta_hat
                extras[method] = {"lam": report.chosen_lambda, "chosen_c": report.chosen_c}
            elif method == "stl":
                estimates[method] = np.column_stack(
                    [solve_stl(task, spec, config) for task in train.tasks]
                )
            else:
                estimates[method] = solve_dp(train, spec, config=config)
        except _FAILURES as e:
            logger.error(f"{method} failed: {e}", exc_info=True)
            errors[method] = f"{type(e).__name__}: {e}"
    return estimates, extras, errors


def _rows(
    methods: Sequence[Method],
    cell: dict,
    metrics: dict[str, MetricsReport],
    extras: dict[str, dict],
    errors: dict[str, str],
) -> list[ResultRow]:
    rows = []
    for method in methods:
        if method in errors:
            rows.append(ResultRow(**cell, method=method, status="error", error=errors[method]))
        else:
            rows.append(
                ResultRow.from_metrics(metrics[method], **cell, **extras.get(method, {}))
            )
    return rows


# --- synthetic ---


def synthetic_cell(
    cfg: ExperimentConfig, epsilon: float, delta: float, replication: int
) -> list[ResultRow]:
    """Generate, tune, fit and score one (epsilon, delta, replication) cell."""
    seed = derive_seed(cfg.master_seed, "synthetic", float(epsilon), float(delta), replication)
    cell = dict(
        mode="synthetic", epsilon=epsilon, delta=delta, replication=replication, seed=seed
    )
    scale = cfg.scale
    try:
        truth = generate_related_coefficients(
            RelatednessSpec(
                m=scale.m,
                epsilon=epsilon,
                delta=delta,
                dim=scale.dim,
                signal=scale.signal,
                tau=scale.tau,
                noise_sd=scale.noise_sd,
                seed=seed,
            )
        )
        train = generate_quantile_tasks(truth, scale.n)
        test = generate_quantile_tasks(truth, scale.n, seed=derive_seed(seed, "test"))
    except _FAILURES as e:
        logger.error(f"data generation failed for {cell}: {e}")
        message = f"{type(e).__name__}: {e}"
        return [
            ResultRow(**cell, method=method, status="error", error=message)
            for method in cfg.methods
        ]

    spec = CheckLoss(tau=scale.tau)
    plan = cfg.cv.model_copy(update={"seed": seed})

    def tune(data, loss, config):
        return kfold_cv(data, loss, plan, config)

    estimates, extras, errors = _fit_methods(cfg.methods, train, spec, _solver_config(cfg), tune)
    metrics = evaluate_metrics(estimates, truth=truth, test=test, spec=spec) if estimates else {}
    return _rows(cfg.methods, cell, metrics, extras, errors)


def run_synthetic_experiment(cfg: ExperimentConfig) -> pd.DataFrame:
    """Full (epsilon, delta, replication) sweep; failures become error rows."""
    cells = [
        (epsilon, delta, r)
        for epsilon in cfg.epsilons
        for delta in cfg.deltas
        for r in range(cfg.replications)
    ]
    logger.info(
        f"Synthetic sweep: {len(cfg.epsilons)} epsilon x {len(cfg.deltas)} delta x "
        f"{cfg.replications} replications, methods {list(cfg.methods)}"
    )
    progress = tqdm(cells, desc="cells", disable=not _show_progress())
    batches = Parallel(n_jobs=cfg.n_jobs, prefer="threads")(
        delayed(synthetic_cell)(cfg, *cell) for cell in progress
    )
    return results_frame(row for batch in batches for row in batch)


# --- newsvendor ---


def _month_start(stamp: np.datetime64) -> pd.Timestamp:
    return pd.Timestamp(stamp).to_period("M").to_timestamp()


def default_test_start(data: MultiTaskDataset) -> pd.Timestamp:
    """First day of the last calendar month present in the data."""
    return _month_start(max(task.times.max() for task in data.tasks))


def _require_times(data: MultiTaskDataset) -> None:
    missing = [task.task_id for task in data.tasks if task.times is None]
    if missing:
        raise InvalidInputError(f"tasks without a time column: {missing}")


def split_windows(
    data: MultiTaskDataset, months: int, test_start: pd.Timestamp
) -> tuple[MultiTaskDataset, MultiTaskDataset]:
    """Trailing ``months``-month training window before ``test_start`` and the test window.

    Raises:
        InvalidInputError: a task's history does not reach back ``months``
            months, or a window is empty.
    """
    _require_times(data)
    start = test_start - pd.DateOffset(months=months)
    start64, test64 = start.to_datetime64(), test_start.to_datetime64()
    train, test = [], []
    for task in data.tasks:
        times = task.times
        if times.min() > start64:
            raise InvalidInputError(
                f"task {task.task_id!r}: history starts {pd.Timestamp(times.min()).date()}, "
                f"too late for a {months}-month window before {test_start.date()}"
            )
        in_train = np.flatnonzero((times >= start64) & (times < test64))
        in_test = np.flatnonzero(times >= test64)
        if in_train.size == 0:
            raise InvalidInputError(f"task {task.task_id!r}: empty {months}-month window")
        if in_test.size == 0:
            raise InvalidInputError(f"task {task.task_id!r}: empty test window")
        train.append(task.subset(in_train))
        test.append(task.subset(in_test))
    return data.replace_tasks(train), data.replace_tasks(test)


def run_newsvendor_experiment(
    data: MultiTaskDataset,
    newsvendor: NewsvendorConfig,
    plan: CvPlan | None = None,
    methods: Sequence[Method] = ("fused", "stl", "dp"),
    config: FusionConfig | None = None,
    seed: int = 0,
) -> pd.DataFrame:
    """Average test check loss (tau = b / (b + h)) per training window length.

    The test window is fixed (``test_start`` or the last month in the data);
    every window length must fit before it for every task.
    """
    plan = plan or CvPlan()
    config = config or FusionConfig(n_jobs=1)
    _require_times(data)
    test_start = (
        pd.Timestamp(newsvendor.test_start)
        if newsvendor.test_start
        else default_test_start(data)
    )
    tau = tau_from_costs(newsvendor.b, newsvendor.h)
    spec = CheckLoss(tau=tau)
    logger.info(
        f"Newsvendor study: m={data.m}, tau={tau:.4f}, test from {test_start.date()}, "
        f"windows {list(newsvendor.months)}"
    )

    def tune(train, loss, fit_config):
        return holdout_cv(train, loss, plan, fit_config)

    rows = []
    for months in tqdm(newsvendor.months, desc="windows", disable=not _show_progress()):
        train, test = split_windows(data, months, test_start)
        logger.info(f"--- Window {months} month(s): {sum(train.sizes)} training samples ---")
        estimates, extras, errors = _fit_methods(methods, train, spec, config, tune)
        metrics = evaluate_metrics(estimates, test=test, spec=spec) if estimates else {}
        cell = dict(mode="newsvendor", months=months, replication=0, seed=seed)
        rows.extend(_rows(methods, cell, metrics, extras, errors))
    return results_frame(rows)


def load_newsvendor_data(cfg: ExperimentConfig) -> MultiTaskDataset:
    """The configured CSV, or the bakery-like fixture seeded by ``master_seed``."""
    newsvendor = cfg.newsvendor
    if newsvendor.data_path:
        if newsvendor.ingest is None or not newsvendor.ingest.time_column:
            raise InvalidInputError("a newsvendor CSV needs an ingest schema with a time column")
        return ingest_csv(newsvendor.data_path, newsvendor.ingest)
    fixture = generate_bakery_fixture(
        stores=newsvendor.fixture_stores,
        months=newsvendor.fixture_months,
        heterogeneity=newsvendor.fixture_heterogeneity,
        seed=cfg.master_seed,
    )
    return fixture.data


def run_experiment(cfg: ExperimentConfig) -> pd.DataFrame:
    """Dispatch on ``cfg.mode``."""
    if cfg.mode == "synthetic":
        return run_synthetic_experiment(cfg)
    data = load_newsvendor_data(cfg)
    return run_newsvendor_experiment(
        data,
        cfg.newsvendor,
        plan=cfg.cv,
        methods=cfg.methods,
        config=_solver_config(cfg),
        seed=cfg.master_seed,
    )
