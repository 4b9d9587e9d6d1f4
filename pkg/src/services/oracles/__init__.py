from src.services.oracles.exact import (
    brute_force_minimize,
    exact_quantile_location,
    fused_objective_field,
    infimal_convolution_1d,
    infimal_identity_radius,
)
from src.services.oracles.reference import reference_solve_fused
from src.services.oracles.theory import check_personalization_bound, quadratic_regularity

__all__ = [
    "exact_quantile_location",
    "brute_force_minimize",
    "fused_objective_field",
    "infimal_convolution_1d",
    "infimal_identity_radius",
    "reference_solve_fused",
    "check_personalization_bound",
    "quadratic_regularity",
]
