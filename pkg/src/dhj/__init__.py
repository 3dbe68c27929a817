"""Discrete Hamilton-Jacobi toolkit.

Variational integrators built from one-step Lagrangians and their right/left
Hamiltonian duals, two evolution schemes for generating-function slopes along
the discrete flow (value recursion and vector-field form), and the reduction
of optimal control problems to the discrete Hamiltonian setting, with a CLI
driving a scalar cubic benchmark.
"""

from .core import (
    ConvergenceError,
    NewtonConfig,
    NewtonResult,
    NumericalError,
    PhasePoint,
    SingularJacobianError,
    as_vec,
    fd_gradient,
    fd_jacobian,
    fd_partial,
    newton_solve,
    newton_solve_detailed,
    norm_inf,
    rk4_reference,
)
from .hj_flow import (
    Branch,
    BranchError,
    GeneratingEntry,
    GeneratingSequence,
    closed_form_ds_step,
    hj_residual_left,
    hj_residual_right,
    run_closed_form_flow,
    solve_generating_sequence,
)
from .hj_vf import (
    DegenerateGridError,
    FieldCoefficients,
    GammaEntry,
    GammaSequence,
    GammaSource,
    SingularDenominatorError,
    closed_form_gamma_step,
    equivalence_check,
    eval_field,
    eval_field_left,
    run_closed_form_vf,
    solve_gamma_generic,
    vf_residual,
    vf_residual_left,
)
from .mechanics import (
    DiscreteHamiltonian,
    DiscreteLagrangian,
    DiscreteTrajectory,
    Side,
    del_step,
    discrete_one_forms,
    hamiltonian_from_lagrangian,
    left_right_relation_residual,
    legendre_left,
    legendre_right,
    run_trajectory,
    step_left,
    step_right,
    symplecticity_defect,
    verify_step,
)
from .optctrl import (
    MODEL_REGISTRY,
    ControlProblem,
    ReducedHamiltonian,
    SignCriterion,
    discretize_right,
    eliminate_control,
    make_sakamoto1d,
    recover_controls,
    reduce,
    secondary_constraint,
)

__version__ = "0.1.0"
