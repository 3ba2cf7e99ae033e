"""Interference mappings: feasibility, spectral radii and max-min utility."""

from .asymptotic import (
    AsymptoticMapping,
    LimitSchedule,
    LinearForm,
    NotWeaklyStandardError,
    NumericForm,
    derive_asymptotic,
    numeric_limit,
)
from .core import (
    ConvergenceError,
    DimensionError,
    InterferenceMapping,
    MappingClass,
    MonotoneNorm,
    NormKind,
    affine_mapping,
    check_axioms,
    linear_mapping,
    norm_equivalence_constant,
)
from .families import scalar_affine_mapping, two_user_concave_mapping
from .feasibility import compute_fixed_point, constrained_feasibility, has_fixed_point
from .loadmodel import (
    NetworkScenario,
    ScenarioError,
    capped_load_mapping,
    coupling_matrix,
    load_mapping,
    maxmin_rate,
    power_mapping,
    random_scenario,
    rate_per_block,
)
from .maxmin import (
    CanonicalProblem,
    efficiency_bound,
    solve_canonical,
    sweep,
    transition_point,
    utility_bound,
)
from .spectral import (
    SolverConfig,
    matrix_spectral_radius,
    solve_conditional_eigenproblem,
    spectral_radius,
    spectral_radius_upper_via_budget,
)

__version__ = "0.1.0"
