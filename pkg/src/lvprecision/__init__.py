"""Reliability and PRMSE of latent-variable measurement models.

Analytic coefficients for the one-factor and unidimensional IRT models, and
a Monte Carlo regression estimator that works for any model that can be
simulated.
"""

__version__ = "0.1.0"

from .analytic import analytic_coefficients, analytic_reports
from .config import dump_model_config, load_fixture, load_model_config, model_hash, model_to_config
from .errors import (
    ComputationError,
    ParseError,
    PatternSpaceTooLarge,
    PrecisionError,
    UnsupportedAnalytic,
    ValidationError,
)
from .kernels import BACKEND
from .mc import McConfig, convergence_diagnostic, estimate_prmse, estimate_reliability
from .models import (
    GradedItem,
    GradedResponseModel,
    HurdleIrtreeModel,
    LatentDistribution,
    LinearFactorModel,
    ResponsePattern,
    Score,
    TwoPLModel,
    validate_model,
)
from .quadrature import (
    QuadratureGrid,
    build_grid,
    eap_score,
    enumerate_patterns,
    marginal_probability,
    pattern_likelihood,
    true_score_curve,
)
from .regression import PrecisionReport, RegressionFit
from .simulation import McSample, simulate

__all__ = [
    "BACKEND",
    "ComputationError",
    "GradedItem",
    "GradedResponseModel",
    "HurdleIrtreeModel",
    "LatentDistribution",
    "LinearFactorModel",
    "McConfig",
    "McSample",
    "ParseError",
    "PatternSpaceTooLarge",
    "PrecisionError",
    "PrecisionReport",
    "QuadratureGrid",
    "RegressionFit",
    "ResponsePattern",
    "Score",
    "TwoPLModel",
    "UnsupportedAnalytic",
    "ValidationError",
    "analytic_coefficients",
    "analytic_reports",
    "build_grid",
    "convergence_diagnostic",
    "dump_model_config",
    "eap_score",
    "enumerate_patterns",
    "estimate_prmse",
    "estimate_reliability",
    "load_fixture",
    "load_model_config",
    "marginal_probability",
    "model_hash",
    "model_to_config",
    "pattern_likelihood",
    "simulate",
    "true_score_curve",
    "validate_model",
]
