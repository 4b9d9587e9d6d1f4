from src.services.pipeline.experiment import (
    default_test_start,
    derive_seed,
    load_newsvendor_data,
    run_experiment,
    run_newsvendor_experiment,
    run_synthetic_experiment,
    split_windows,
    synthetic_cell,
)
from src.services.pipeline.ingest import ingest_csv
from src.services.pipeline.metrics import as_estimate_matrix, evaluate_metrics
from src.services.pipeline.summary import (
    PLOT_COLUMNS,
    RESULT_COLUMNS,
    SUMMARY_COLUMNS,
    plot_data,
    results_frame,
    summarize,
)

__all__ = [
    "default_test_start",
    "derive_seed",
    "load_newsvendor_data",
    "run_experiment",
    "run_newsvendor_experiment",
    "run_synthetic_experiment",
    "split_windows",
    "synthetic_cell",
    "ingest_csv",
    "as_estimate_matrix",
    "evaluate_metrics",
    "PLOT_COLUMNS",
    "RESULT_COLUMNS",
    "SUMMARY_COLUMNS",
    "plot_data",
    "results_frame",
    "summarize",
]
