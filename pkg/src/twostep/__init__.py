"""Two-step variable selection for sparse linear regression.

A first-stage estimator (OLS, univariate, ridge with GCV, or Lasso)
feeds a second-stage selector: the nonnegative Garrote, the adaptive
Lasso, or hard-thresholding.  The package bundles exact sign-recovery
certificates, design diagnostics, and a deterministic Monte Carlo
harness, all driven from the `twostep` command-line tool.
"""

from .data import (
    Dataset,
    Standardization,
    TrueModel,
    make_dataset,
    make_true_model,
    sign_pattern,
    standardize,
    support_of,
    to_original_coords,
)
from .descent import HAVE_COMPILED, CDWorkspace
from .diagnostics import (
    Assumption2Report,
    DesignDiagnostics,
    SignRecoveryCertificate,
    assumption2_report,
    certify_alasso,
    certify_garrote,
    design_constants,
    eta_infinity,
    oracle_variance,
)
from .errors import (
    AllWeightsInfiniteError,
    ConstantColumnError,
    DegenerateGCVError,
    MaxIterationsError,
    NonConvergenceError,
    SingularMatrixError,
    SpecMismatchError,
    TwoStepError,
)
from .features import FeatureExpansionSpec, expand_features
from .initial import (
    InitialEstimate,
    PathSolution,
    default_lambda_grid,
    fit_ols,
    fit_ridge,
    fit_univariate,
    lasso_lambda_max,
    lasso_path,
    select_ridge_gcv,
)
from .selectors import (
    GarroteSolution,
    MethodSpec,
    alasso_fit,
    alasso_lambda_max,
    alasso_path,
    fit_at,
    fit_initial,
    fit_path,
    garrote_fit,
    garrote_lambda_max,
    garrote_path,
    hard_threshold,
    ht_grid,
    kkt_residual,
    objective_value,
    parse_method,
    select_lambda_cv,
    select_lambda_oracle,
)
from .simulate import (
    BetaSpec,
    CovarianceSpec,
    ExperimentConfig,
    MetricsRecord,
    config_from_dict,
    config_to_dict,
    gen_beta,
    rpe,
    run_prediction_experiment,
    run_selection_experiment,
    sample_design,
    sample_wishart,
    scale_config,
    tp_fp,
)

__version__ = "1.0.0"

__all__ = [
    "AllWeightsInfiniteError",
    "Assumption2Report",
    "BetaSpec",
    "CDWorkspace",
    "ConstantColumnError",
    "CovarianceSpec",
    "Dataset",
    "DegenerateGCVError",
    "DesignDiagnostics",
    "ExperimentConfig",
    "FeatureExpansionSpec",
    "GarroteSolution",
    "HAVE_COMPILED",
    "InitialEstimate",
    "MaxIterationsError",
    "MethodSpec",
    "MetricsRecord",
    "NonConvergenceError",
    "PathSolution",
    "SignRecoveryCertificate",
    "SingularMatrixError",
    "SpecMismatchError",
    "Standardization",
    "TrueModel",
    "TwoStepError",
    "alasso_fit",
    "alasso_lambda_max",
    "alasso_path",
    "assumption2_report",
    "certify_alasso",
    "certify_garrote",
    "config_from_dict",
    "config_to_dict",
    "default_lambda_grid",
    "design_constants",
    "eta_infinity",
    "expand_features",
    "fit_at",
    "fit_initial",
    "fit_ols",
    "fit_path",
    "fit_ridge",
    "fit_univariate",
    "garrote_fit",
    "garrote_lambda_max",
    "garrote_path",
    "gen_beta",
    "hard_threshold",
    "ht_grid",
    "kkt_residual",
    "lasso_lambda_max",
    "lasso_path",
    "make_dataset",
    "make_true_model",
    "objective_value",
    "oracle_variance",
    "parse_method",
    "rpe",
    "run_prediction_experiment",
    "run_selection_experiment",
    "sample_design",
    "sample_wishart",
    "scale_config",
    "select_lambda_cv",
    "select_lambda_oracle",
    "select_ridge_gcv",
    "sign_pattern",
    "standardize",
    "support_of",
    "to_original_coords",
    "tp_fp",
]
