"""Bifurcating sign-changing solutions of an overdetermined problem on perturbed strips."""
from stripbif.domain import (
    BoundaryProfile,
    DimensionError,
    DomainError,
    LinearPair,
    ParameterError,
    StripField,
    StripGrid,
    StripParams,
    collocation_grid,
    eval_profile,
    inner_product,
    make_strip,
    map_to_physical,
    map_to_reference,
)
from stripbif.operators import (
    F,
    OperatorOutput,
    adjoint_apply,
    apply_pulled_back_operator,
    jacobian,
    linearization_at_origin,
    neumann_functional,
    normal_derivative,
    substitute_U,
)
from stripbif.linear_analysis import (
    cokernel_integral,
    cokernel_pair,
    eigenvalue_sequence,
    kernel_pair,
    mode_ode_solution,
    mode_simplicity_check,
    super_mode_integral,
    transversality_pairing,
)
from stripbif.continuation import BranchPoint, ContinuationConfig, initial_point, newton_step, trace_branch
from stripbif.verify import VerificationReport, check_overdetermined, pushforward_solution, schiffer_rescale
from stripbif.persistence import BranchFormatError, export_branch, export_domain, import_branch

__all__ = [
    "BoundaryProfile", "DimensionError", "DomainError", "LinearPair", "ParameterError",
    "StripField", "StripGrid", "StripParams", "collocation_grid", "eval_profile",
    "inner_product", "make_strip", "map_to_physical", "map_to_reference",
    "F", "OperatorOutput", "adjoint_apply", "apply_pulled_back_operator", "jacobian",
    "linearization_at_origin", "neumann_functional", "normal_derivative", "substitute_U",
    "cokernel_integral", "cokernel_pair", "eigenvalue_sequence", "kernel_pair",
    "mode_ode_solution", "mode_simplicity_check", "super_mode_integral", "transversality_pairing",
    "BranchPoint", "ContinuationConfig", "initial_point", "newton_step", "trace_branch",
    "VerificationReport", "check_overdetermined", "pushforward_solution", "schiffer_rescale",
    "BranchFormatError", "export_branch", "export_domain", "import_branch",
]
