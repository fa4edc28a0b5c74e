"""Analytic reliability and PRMSE for the model families that admit them."""

from __future__ import annotations

from . import irt, linear
from .errors import UnsupportedAnalytic
from .models import GradedResponseModel, LinearFactorModel, TwoPLModel
from .quadrature import PATTERN_CAP, QuadratureGrid
from .regression import PrecisionReport

COEFFICIENTS = (
    ("reliability", "eap", "reliability_eap"),
    ("reliability", "summed", "reliability_summed"),
    ("prmse", "eta", "prmse_lv"),
    ("prmse", "true_summed", "prmse_true_summed"),
)


def analytic_coefficients(model, grid: QuadratureGrid | None = None,
                          cap: int = PATTERN_CAP) -> dict[str, float]:
    """Reliability of the EAP and summed scores, PRMSE of the LV and true summed score.

    Supported: one-factor linear models (closed form) and unidimensional
    2PL / graded models (pattern enumeration plus quadrature).
    """
    if isinstance(model, LinearFactorModel):
        if model.latent.dimension != 1:
            raise UnsupportedAnalytic("closed forms cover the one-factor model; use mc")
        return {
            "reliability_eap": linear.reliability_eap_factor(model),
            "reliability_summed": linear.reliability_summed_factor(model),
            "prmse_lv": linear.prmse_lv_factor(model),
            "prmse_true_summed": linear.prmse_true_summed_factor(model),
        }
    if isinstance(model, (TwoPLModel, GradedResponseModel)) and model.latent.dimension == 1:
        return irt.analytic_coefficients(model, grid, cap)
    raise UnsupportedAnalytic(
        f"no analytic coefficients for a {type(model).__name__} with "
        f"d={model.latent.dimension}; use the mc command"
    )


def analytic_reports(model, grid: QuadratureGrid | None = None,
                     cap: int = PATTERN_CAP) -> list[tuple[str, PrecisionReport]]:
    from .config import model_hash

    values = analytic_coefficients(model, grid, cap)
    digest = model_hash(model)
    return [
        (f"{kind}({score})", PrecisionReport(values[key], kind, "analytic", model_hash=digest))
        for kind, score, key in COEFFICIENTS
    ]
