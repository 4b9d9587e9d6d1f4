from src.services.tuning.cv import (
    holdout_cv,
    holdout_split,
    kfold_cv,
    kfold_splits,
    lambda_grid,
)

__all__ = ["lambda_grid", "kfold_cv", "kfold_splits", "holdout_cv", "holdout_split"]
