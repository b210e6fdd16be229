"""Distributed online convex optimization over communication networks."""

from .graphs import (
    Graph,
    WeightMatrix,
    generate_random_connected_graph,
    max_degree_weights,
    validate_doubly_stochastic,
)
from .problems import (
    ConstraintSet,
    DispatchProblem,
    LossSequence,
    QuadraticRegressionLoss,
    ShrunkSet,
    dispatch_problem,
    sample_regression_sequence,
)
from .admm import (
    AdmmProblem,
    AdmmState,
    Quadratic,
    SumConstraint,
    admm_solve,
    augmented_lagrangian,
    dispatch_admm,
    dispatch_kkt,
)
from .online import (
    BanditState,
    StepSchedule,
    Trajectory,
    bandit_round,
    gradient_estimate,
    ogd_step,
    run_ogd,
    sample_unit_sphere,
)
from .distributed import (
    NetworkRun,
    consensus_mix,
    primal_dual_step_bandit,
    primal_dual_step_full,
    run_distributed,
)
from .metrics import (
    MetricsTrace,
    cacv,
    metrics_trace,
    offline_oracle,
    per_round_oracle,
    per_round_oracle_series,
    stationarity_stats,
    system_regret,
)
from .harness import (
    DispatchConfig,
    ExperimentConfig,
    RunArtifacts,
    compare_dro_do,
    run_dispatch_demo,
    run_example3,
    run_single_learner,
)

__version__ = "0.1.0"
