"""Energy-stable gradient optimizers, benchmark problems, and diagnostics."""

from .optimizers import (
    BaselineState,
    HyperParams,
    NonPositiveShiftedValue,
    OptimizerState,
    StepOutput,
    adam_step,
    aegd_step,
    aegdm_step,
    energy_update,
    generic_step,
    momentum_accumulate,
    position_update,
    sgd_step,
    sgdm_step,
    transformed_gradient,
)
from .problems import (
    Evaluation,
    InvalidBatch,
    LeastSquaresProblem,
    LogisticProblem,
    NonSPD,
    OnlineQuadraticSequence,
    Quadratic,
    Rosenbrock,
    b_minibatch_sample,
    finite_difference_gradient,
    online_quadratic_sequence,
    rosenbrock_eval,
)
from .diagnostics import (
    BoundReport,
    TrajectoryTrace,
    check_convergence_bound,
    check_energy_lower_bound,
    check_energy_monotone,
    check_G_bound,
    check_ode_conservation,
    check_regret_bound,
    check_step_sum_bound,
    check_v_average_bound,
    compute_LF,
    compute_regret,
)
from .harness import (
    ExperimentConfig,
    RunResult,
    Schedule,
    compare_optimizers,
    emit_csv,
    grid_search,
    parse_config,
    run_experiment,
)

__version__ = "0.1.0"
