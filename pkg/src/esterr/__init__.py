"""Estimation error of sample-optimized quadratic programs when N/T is finite."""
from esterr.errors import (
    BudgetViolation,
    ConfigError,
    CriticalOrSupercritical,
    DegenerateDenominator,
    DimensionMismatch,
    EstErrError,
    Infeasible,
    InsufficientPoints,
    InvalidProgram,
    InvalidSpec,
    MaxIterations,
    SingularSystem,
    TooLarge,
)
from esterr.experiment import (
    ErrorSample,
    ExperimentResult,
    ExperimentSpec,
    FailureRecord,
    Mode,
    SweepPoint,
    ratio_grid,
    run_sample,
    run_sweep,
    weight_dispersion_scan,
)
from esterr.kernels import BACKEND as KERNEL_BACKEND
from esterr.metrics import (
    ExponentFit,
    analytic_q0,
    fit_critical_exponent,
    q0_general,
    q0_iid_shortcut,
    q0_variance,
    regression_cost,
)
from esterr.moments import CovarianceMatrix, empirical_covariance, empirical_cross_moment, numerical_rank
from esterr.processes import Family, ProcessSpec, ProcessTemplate, SampleMatrix, generate_sample, true_covariance
from esterr.qp import (
    QuadraticProgram,
    Solution,
    Status,
    brute_force_oracle,
    regression_to_qp,
    solve_equality_qp,
    solve_min_variance,
    solve_nonneg_qp,
)

__version__ = "0.1.0"
