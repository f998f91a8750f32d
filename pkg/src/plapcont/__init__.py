"""Constructive machinery for the singular p-Laplacian Dirichlet problem.

Solve -Delta_p u = lambda f(u) + h with zero boundary data for reaction
terms f that blow up (at most like u^-beta, beta < 1) near u = 0:
singular-load solution operator, first eigenpair, explicit lower/upper
barriers with their constants, truncated fixed-point solves, branch
tracing over lambda, and bisection for the solvability threshold.
"""

from .grid import (
    GridFunction,
    InvalidMeshError,
    Mesh,
    build_interval_mesh,
    build_radial_mesh,
    constant_function,
    distance_field,
    grid_function,
    zero_function,
)
from .plap import (
    ComparisonReport,
    PValue,
    apply_p_laplacian,
    check_weak_comparison,
    energy,
    hardy_ratio,
    simon_gap,
    weak_residual,
)
from .dirichlet_solver import (
    Eps0NotFoundError,
    SingularRHS,
    SolveOptions,
    SolverFailure,
    default_solve_options,
    find_eps0,
    solve_S,
    solve_cutoff,
)
from .eigen import EigenPair, comparability_constants, first_eigenpair, rayleigh_quotient
from .nonlin import (
    AssumptionReport,
    DomainError,
    Nonlinearity,
    eval_f,
    f_prime,
    make_nonlinearity,
    validate_assumptions,
)
from .barriers import (
    BarrierBuild,
    BarrierConstructionError,
    BarrierPack,
    LowerConstants,
    MarginReport,
    UpperPack,
    build_barrier_pack,
    build_psi,
    lower_constants,
    lower_solution,
    solve_singular_phi,
    upper_constants,
    verify_subsolution,
    verify_supersolution,
)
from .fixedpoint import (
    FixedPointOptions,
    FixedPointResult,
    TruncationContext,
    T_map,
    bound_truncation,
    context_for,
    solve_fixed_point,
    truncate_f,
)
from .problem import PreparedProblem, ProblemSpec, prepare_problem
from .continuum import (
    Branch,
    BranchPoint,
    ConnectednessReport,
    ThresholdEstimate,
    ThresholdPreconditionError,
    check_connectedness,
    exploratory_solve,
    find_threshold,
    solvability_monotonicity,
    trace_branch,
    trace_branch_parallel,
)
from . import calibration

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport",
    "BarrierBuild",
    "BarrierConstructionError",
    "BarrierPack",
    "Branch",
    "BranchPoint",
    "ComparisonReport",
    "ConnectednessReport",
    "DomainError",
    "EigenPair",
    "Eps0NotFoundError",
    "FixedPointOptions",
    "FixedPointResult",
    "GridFunction",
    "InvalidMeshError",
    "LowerConstants",
    "MarginReport",
    "Mesh",
    "Nonlinearity",
    "PValue",
    "PreparedProblem",
    "ProblemSpec",
    "SingularRHS",
    "SolveOptions",
    "SolverFailure",
    "T_map",
    "ThresholdEstimate",
    "ThresholdPreconditionError",
    "TruncationContext",
    "UpperPack",
    "apply_p_laplacian",
    "bound_truncation",
    "build_barrier_pack",
    "build_interval_mesh",
    "build_psi",
    "build_radial_mesh",
    "calibration",
    "check_connectedness",
    "check_weak_comparison",
    "comparability_constants",
    "constant_function",
    "context_for",
    "default_solve_options",
    "distance_field",
    "energy",
    "eval_f",
    "exploratory_solve",
    "f_prime",
    "find_eps0",
    "find_threshold",
    "first_eigenpair",
    "grid_function",
    "hardy_ratio",
    "lower_constants",
    "lower_solution",
    "make_nonlinearity",
    "prepare_problem",
    "rayleigh_quotient",
    "simon_gap",
    "solvability_monotonicity",
    "solve_S",
    "solve_cutoff",
    "solve_fixed_point",
    "solve_singular_phi",
    "trace_branch",
    "trace_branch_parallel",
    "truncate_f",
    "upper_constants",
    "validate_assumptions",
    "verify_subsolution",
    "verify_supersolution",
    "weak_residual",
    "zero_function",
]
