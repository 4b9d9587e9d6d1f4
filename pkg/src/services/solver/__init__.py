from src.services.solver.admm import (
    objective_value,
    optimality_residual,
    pooled_columns,
    pooling_threshold,
    solve_fused,
)
from src.services.solver.baselines import minimize_risk, predict, solve_dp, solve_stl
from src.services.solver.prox import prox_group_norm, solve_prox, theta_subproblem

__all__ = [
    "objective_value",
    "optimality_residual",
    "pooled_columns",
    "pooling_threshold",
    "solve_fused",
    "solve_stl",
    "solve_dp",
    "minimize_risk",
    "predict",
    "prox_group_norm",
    "solve_prox",
    "theta_subproblem",
]
