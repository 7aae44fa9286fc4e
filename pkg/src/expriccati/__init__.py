"""Exponential Rosenbrock-type integrators for stiff matrix Riccati and
Sylvester differential equations, with dense, low-rank LDL^T and
Sylvester-solve realizations plus closed-form and vectorization oracles."""

from .densecore import compress, expm, solve_sylvester
from .errors import (
    ConfigurationError,
    DimensionError,
    DomainError,
    FiniteEscapeError,
    IntegrationError,
    MatrixFormatError,
    SolvabilityError,
    UsageError,
)
from .integrators import (
    SCHEMES,
    IntegratorConfig,
    RiccatiProblem,
    Trajectory,
    integrate,
    step_erow3,
    step_expeuler_backward,
    step_expeuler_general,
    step_expeuler_lowrank,
    step_msde_polynomial,
)
from .krylov import BlockKrylovBasis, build_basis, exp_action_krylov, exp_actions_krylov
from .lowrank import (
    LdlFactor,
    assemble_phi_sum,
    assemble_remainder_diff,
    assemble_rhs,
    concat_update,
)
from .oracle import kronecker_phi, radon_solve, radon_trajectory
from .phifun import (
    PhiCombination,
    QuadratureRule,
    eval_backward,
    eval_forward,
    phi_action_quadrature,
    phi_scalar,
)
from .problems import (
    Fdm2dSpec,
    build_symmetric_problem,
    fdm2d_matrix,
    fdm_nonsym,
    fdm_sym,
    load_problem,
    problem_from_spec,
    random_lowrank,
    save_problem,
    scalar_tanh_problem,
)
from .sylvop import (
    Linearization,
    SylvesterOperator,
    linearize,
    phi1_action_augmented,
    phi_action_augmented,
)

__version__ = "0.1.0"

__all__ = [
    "BlockKrylovBasis",
    "ConfigurationError",
    "DimensionError",
    "DomainError",
    "Fdm2dSpec",
    "FiniteEscapeError",
    "IntegrationError",
    "IntegratorConfig",
    "LdlFactor",
    "Linearization",
    "MatrixFormatError",
    "PhiCombination",
    "QuadratureRule",
    "RiccatiProblem",
    "SCHEMES",
    "SolvabilityError",
    "SylvesterOperator",
    "Trajectory",
    "UsageError",
    "assemble_phi_sum",
    "assemble_remainder_diff",
    "assemble_rhs",
    "build_basis",
    "build_symmetric_problem",
    "compress",
    "concat_update",
    "eval_backward",
    "eval_forward",
    "exp_action_krylov",
    "exp_actions_krylov",
    "expm",
    "fdm2d_matrix",
    "fdm_nonsym",
    "fdm_sym",
    "integrate",
    "kronecker_phi",
    "linearize",
    "load_problem",
    "phi1_action_augmented",
    "phi_action_augmented",
    "phi_action_quadrature",
    "phi_scalar",
    "problem_from_spec",
    "radon_solve",
    "radon_trajectory",
    "random_lowrank",
    "save_problem",
    "scalar_tanh_problem",
    "solve_sylvester",
    "step_erow3",
    "step_expeuler_backward",
    "step_expeuler_general",
    "step_expeuler_lowrank",
    "step_msde_polynomial",
    "integrate",
]
