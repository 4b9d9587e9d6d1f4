"""Configuration loader using Pydantic Settings.

Why this approach:
- Loads from .env file automatically (variables prefixed with FUSION_)
- Type validation for all settings
- Cached via @lru_cache so every solver call sees the same defaults
- Computed properties for list-valued settings (like c_grid_list)
"""

from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Library and CLI defaults loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env", env_prefix="FUSION_", extra="ignore"
    )

    # Runtime
    log_level: str = "INFO"
    n_jobs: int = 1  # Threads for per-task theta updates and experiment cells
    output_dir: str = "output"
    master_seed: int = 2024

    # Consensus ADMM
    admm_step: float = 1.0
    residual_balancing: bool = True
    balance_period: int = 10  # Iterations between sigma updates
    balance_until: int = 500  # sigma is frozen after this iteration
    tol_abs: float = 1e-8
    tol_rel: float = 1e-6
    max_outer_iters: int = 2000

    # Theta subproblem
    inner_tol: float = 1e-9
    max_inner_iters: int = 5000
    kink_tol: float = 1e-9  # |residual| below this counts as a kink

    # Oracles
    brute_force_cell_budget: int = 10_000_000
    reference_budget: int = 20_000

    # Tuning
    c_grid: str = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0"
    cv_folds: int = 5
    holdout_fraction: float = 0.8

    @property
    def c_grid_list(self) -> list[float]:
        """Parse comma-separated C values into a list."""
        return [float(c.strip()) for c in self.c_grid.split(",") if c.strip()]


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance.

    Using @lru_cache ensures we only parse .env once.
    """
    return Settings()
