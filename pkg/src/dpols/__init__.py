"""Differentially private second-moment releases with least-squares inference.

Two release mechanisms (a gated Gaussian sketch and an additive-noise
second-moment matrix) and the estimators that turn their outputs into
coefficients, t-values, confidence intervals, and null-hypothesis
decisions, plus a seeded Monte Carlo harness that validates the
distributional claims behind each path.
"""

from .analyze_gauss import (
    AnalyzeGauss,
    AnalyzeGaussInference,
    GramRelease,
    gaussian_noise_scale,
    release_noisy_gram,
)
from .data_io import load_csv
from .exceptions import (
    DegenerateFitError,
    DpolsError,
    InfeasibleRegimeError,
    InsufficientRowsError,
    InvalidInputError,
    InvalidParameterError,
    NotPositiveDefiniteError,
    PreconditionFailedError,
    RowBoundViolationError,
    SingularMatrixError,
    UndefinedPowerError,
    WrongPathError,
)
from .experiments import ExperimentConfig, power_tables, run_experiment
from .ledger import BudgetLedger
from .ols import LeastSquaresInference, min_sample_size_baseline
from .projected import (
    ProjectedLeastSquares,
    choose_r,
    min_r_for_power,
    private_sigma_min_lower_bound,
    sandwich_cdf_band,
    sandwich_pdf_bounds,
)
from .projection import (
    BoundedDataset,
    GateDecision,
    PrivacyBudget,
    PrivateProjection,
    ProjectionRelease,
    append_regularizer,
    noise_magnitude_w,
    project,
    ptr_gate,
)
from .reports import IntervalReport, reports_to_csv, reports_to_json
from .ridge import (
    ConditionReport,
    ProjectedRidgeInference,
    check_interval_condition,
    check_sign_condition,
    select_r_ridge,
)
from .synthetic import (
    GaussianLinearModel,
    analytic_row_bound,
    build_sigma_a,
    dataset_to_csv,
    empirical_row_bound,
    generate_dataset,
    sigma_a_min_bound,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyzeGauss",
    "AnalyzeGaussInference",
    "BoundedDataset",
    "BudgetLedger",
    "ConditionReport",
    "DegenerateFitError",
    "DpolsError",
    "ExperimentConfig",
    "GateDecision",
    "GaussianLinearModel",
    "GramRelease",
    "InfeasibleRegimeError",
    "InsufficientRowsError",
    "IntervalReport",
    "InvalidInputError",
    "InvalidParameterError",
    "LeastSquaresInference",
    "NotPositiveDefiniteError",
    "PreconditionFailedError",
    "PrivacyBudget",
    "PrivateProjection",
    "ProjectedLeastSquares",
    "ProjectedRidgeInference",
    "ProjectionRelease",
    "RowBoundViolationError",
    "SingularMatrixError",
    "UndefinedPowerError",
    "WrongPathError",
    "analytic_row_bound",
    "append_regularizer",
    "build_sigma_a",
    "check_interval_condition",
    "check_sign_condition",
    "choose_r",
    "dataset_to_csv",
    "empirical_row_bound",
    "gaussian_noise_scale",
    "generate_dataset",
    "load_csv",
    "min_r_for_power",
    "min_sample_size_baseline",
    "noise_magnitude_w",
    "power_tables",
    "private_sigma_min_lower_bound",
    "project",
    "ptr_gate",
    "release_noisy_gram",
    "reports_to_csv",
    "reports_to_json",
    "run_experiment",
    "sandwich_cdf_band",
    "sandwich_pdf_bounds",
    "select_r_ridge",
    "sigma_a_min_bound",
]
