from src.services.losses.profiles import (
    LinearKinkProfile,
    PiecewiseCostProfile,
    ResidualProfile,
    SquaredProfile,
    profile_for,
)
from src.services.losses.risk import (
    RiskTerms,
    check_loss,
    empirical_risk,
    empirical_subgradient,
    lipschitz_bound,
    loss_subgradient,
    loss_value,
    stack_tasks,
    task_arrays,
    task_terms,
    tau_from_costs,
)

__all__ = [
    "ResidualProfile",
    "LinearKinkProfile",
    "SquaredProfile",
    "PiecewiseCostProfile",
    "profile_for",
    "RiskTerms",
    "check_loss",
    "tau_from_costs",
    "loss_value",
    "loss_subgradient",
    "empirical_risk",
    "empirical_subgradient",
    "lipschitz_bound",
    "task_arrays",
    "task_terms",
    "stack_tasks",
]
