"""Estimation of potential-outcome mean vectors under random assignment.

Subsample means plus pooled/separate regression adjustment, linear and
quasi-likelihood, with influence-function covariance matrices, contrast
inference (treatment effects, difference in differences, WTP lower
bounds), and a reproducible Monte Carlo laboratory.
"""

from .data import Dataset, demean_covariates, validate_dataset
from .errors import (
    ArmTooSmallError,
    BidOrderViolationError,
    DataError,
    DegenerateSampleError,
    DimensionMismatchError,
    EmptyArmError,
    EstimatorFailedError,
    FamilySupportError,
    GradientNonFiniteError,
    NoConvergenceError,
    NonFiniteError,
    NumericError,
    PomeansError,
    RankDeficientError,
    SeparationError,
    TrialsViolationError,
    UnknownModelError,
)
from .families import FAMILIES, Family, get_family
from .inference import contrast_estimate, psd_compare, vcov_from_influence
from .linalg import OlsFit, ols
from .linear import estimate_pra, estimate_sm, estimate_sra
from .qmle import QmleFit, estimate_npra, estimate_nsra, pooled_stacked_vcov, qmle_fit
from .results import (
    Contrast,
    ContrastResult,
    EstimatorResult,
    InfluenceDecomposition,
    PsdReport,
)
from .simlab import (
    Population,
    PopulationModel,
    SimulationSummary,
    arm_from_uniform,
    assign_treatments,
    builtin_parameterizations,
    default_family,
    generate_population,
    get_model,
    run_replications,
    sample_without_replacement,
)
from .wtp import WtpSpec, wtp_lower_bound, wtp_weights

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "validate_dataset",
    "demean_covariates",
    "ols",
    "OlsFit",
    "estimate_sm",
    "estimate_sra",
    "estimate_pra",
    "qmle_fit",
    "QmleFit",
    "estimate_nsra",
    "estimate_npra",
    "pooled_stacked_vcov",
    "Family",
    "FAMILIES",
    "get_family",
    "vcov_from_influence",
    "contrast_estimate",
    "psd_compare",
    "Contrast",
    "ContrastResult",
    "EstimatorResult",
    "InfluenceDecomposition",
    "PsdReport",
    "PopulationModel",
    "Population",
    "builtin_parameterizations",
    "get_model",
    "generate_population",
    "assign_treatments",
    "arm_from_uniform",
    "sample_without_replacement",
    "run_replications",
    "SimulationSummary",
    "default_family",
    "WtpSpec",
    "wtp_lower_bound",
    "wtp_weights",
    "PomeansError",
    "DataError",
    "NumericError",
    "EmptyArmError",
    "NonFiniteError",
    "TrialsViolationError",
    "FamilySupportError",
    "BidOrderViolationError",
    "DimensionMismatchError",
    "RankDeficientError",
    "ArmTooSmallError",
    "NoConvergenceError",
    "SeparationError",
    "DegenerateSampleError",
    "GradientNonFiniteError",
    "EstimatorFailedError",
    "UnknownModelError",
]
