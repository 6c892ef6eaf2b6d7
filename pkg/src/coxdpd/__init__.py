"""Robust parametric proportional hazards estimation for censored data.

The package fits fully parametric proportional hazards models to right
censored survival data by minimizing a density power divergence.  A tuning
constant trades statistical efficiency for robustness against outlying
observations; at zero the estimator is exact maximum likelihood.
"""

from .data import Dataset, Theta, ingest_csv, parameter_names, write_csv
from .dpd import (
    DEFAULT_QUADRATURE,
    EstimatingValue,
    IntegrationError,
    QuadratureConfig,
    density_power_integral,
    dpd_objective,
    estimating_function,
    objective_and_gradient,
    per_observation_contribution,
    xi_terms,
)
from .estimator import ParametricCoxDPD
from .fitting import FitOptions, FitResult, fit_mdpde, fit_mle, fit_path
from .hazards import (
    BaselineHazard,
    ExponentialHazard,
    PiecewiseConstantHazard,
    WeibullHazard,
    baseline_from_name,
)
from .inference import (
    InfluenceRecord,
    ResidualRecord,
    SandwichResult,
    SingularInformationError,
    fit_report,
    influence_diagnostics,
    residual_diagnostics,
    sandwich_covariance,
    write_diagnostics_csv,
)
from .model import (
    conditional_survival,
    linear_predictor,
    log_density,
    score,
    survival_matrix,
)
from .simulate import (
    DEFAULT_ALPHA_GRID,
    SimDesign,
    StudyConfig,
    StudyResult,
    calibrate_censoring,
    generate_dataset,
    load_study_config,
    run_study,
    write_study_csvs,
)

__version__ = "0.1.0"

__all__ = [
    "BaselineHazard",
    "DEFAULT_ALPHA_GRID",
    "DEFAULT_QUADRATURE",
    "Dataset",
    "EstimatingValue",
    "ExponentialHazard",
    "FitOptions",
    "FitResult",
    "InfluenceRecord",
    "IntegrationError",
    "ParametricCoxDPD",
    "PiecewiseConstantHazard",
    "QuadratureConfig",
    "ResidualRecord",
    "SandwichResult",
    "SimDesign",
    "SingularInformationError",
    "StudyConfig",
    "StudyResult",
    "Theta",
    "WeibullHazard",
    "baseline_from_name",
    "calibrate_censoring",
    "conditional_survival",
    "density_power_integral",
    "dpd_objective",
    "estimating_function",
    "fit_mdpde",
    "fit_mle",
    "fit_path",
    "fit_report",
    "generate_dataset",
    "influence_diagnostics",
    "ingest_csv",
    "linear_predictor",
    "load_study_config",
    "log_density",
    "objective_and_gradient",
    "parameter_names",
    "per_observation_contribution",
    "residual_diagnostics",
    "run_study",
    "sandwich_covariance",
    "score",
    "survival_matrix",
    "write_csv",
    "write_diagnostics_csv",
    "write_study_csvs",
    "xi_terms",
]
