"""Inertial Bregman proximal alternating minimization solvers and benchmarks.

The engine iterates two-block nonconvex objectives L(x, y) = f(x) + Q(x, y)
+ g(y) by alternating Bregman-proximal steps on the linearized coupling,
with up to two orders of inertial extrapolation, and ships the classical
baselines as named variants. Three ready-made problem families (sparse NMF,
L-half signal recovery, quadratic fractional programming over a box) plug
into the same engine; the ``bench`` CLI reproduces the reference experiment
suites as CSV traces, summaries and figures.
"""

from .bench import RunResult, SuiteResult, emit_figure_series, run_suite
from .config import BenchConfig, RunConfig, default_config, emit_config, parse_config
from .engine import (
    VARIANTS,
    CoefficientSeq,
    InertialSchedule,
    IterationRecord,
    RunTrace,
    SolverState,
    StoppingRule,
    benefit_H,
    compute_rho,
    criticality_residual,
    decrease_ok,
    run,
    sufficient_decrease_check,
    validate_schedule,
)
from .errors import (
    BregPalmError,
    CapabilityError,
    ConfigError,
    DomainError,
    InadmissibleScheduleError,
    MatrixParseError,
    ParameterError,
    SolverFault,
)
from .geometry import (
    BregmanGeometry,
    bregman_distance,
    geometry_from_token,
    make_euclidean,
    make_itakura_saito,
    make_kl,
    make_mahalanobis,
)
from .linalg import (
    gaussian_matrix,
    load_matrix,
    normalize_for_contraction,
    save_matrix,
    spectral_norm_sq,
)
from .problems import (
    CoupledProblem,
    QfpProblem,
    SignalRecoveryProblem,
    SparseNmfProblem,
    load_qfp_problem1,
    make_random_qfp,
    make_signal_recovery,
    make_synthetic_nmf,
)
from .prox import (
    SparsityBudget,
    half_shrinkage,
    half_shrinkage_threshold,
    project_box,
    project_nonneg,
    project_sparse_nonneg,
    project_sparse_nonneg_columns,
)

__version__ = "0.1.0"
