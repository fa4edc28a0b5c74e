"""Analytic reliability and PRMSE for unidimensional categorical models.

Moments of pattern-indexed quantities (observed EAP scores, summed scores,
EAPs of the true summed score) are exact sums over every admissible response
pattern weighted by its marginal probability.  Moments of latent quantities
(true scores, the latent variable itself) are quadrature sums over the grid.
Works for the 2PL model and for unidimensional graded models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import UnsupportedAnalytic
from .models import Score, TwoPLModel, GradedResponseModel
from .quadrature import PATTERN_CAP, QuadratureGrid, build_grid, enumerate_patterns, posterior_table


def _weighted_var(values: np.ndarray, probs: np.ndarray) -> float:
    mean = probs @ values
    return float(probs @ (values - mean) ** 2)


@dataclass(frozen=True)
class PatternMoments:
    """Everything the analytic coefficients are built from."""

    patterns: np.ndarray
    probability: np.ndarray
    eap: np.ndarray              # E(eta | y)
    eap_true_summed: np.ndarray  # E(tau_s | y)
    summed: np.ndarray           # s(y)
    posterior_variance: np.ndarray  # Var(eta | y)
    true_eap: np.ndarray         # E(eap | eta) at the grid nodes
    true_summed: np.ndarray      # tau_s at the grid nodes
    grid: QuadratureGrid
    latent_variance: float

    @property
    def var_eap(self) -> float:
        return _weighted_var(self.eap, self.probability)

    @property
    def var_true_eap(self) -> float:
        return self.grid.variance(self.true_eap)

    @property
    def var_summed(self) -> float:
        return _weighted_var(self.summed, self.probability)

    @property
    def var_true_summed(self) -> float:
        return self.grid.variance(self.true_summed)

    @property
    def var_eap_true_summed(self) -> float:
        return _weighted_var(self.eap_true_summed, self.probability)

    @property
    def expected_posterior_variance(self) -> float:
        return float(self.probability @ self.posterior_variance)


def _require_unidimensional(model) -> None:
    if not isinstance(model, (TwoPLModel, GradedResponseModel)):
        raise UnsupportedAnalytic(
            f"no analytic coefficients for {type(model).__name__}; use the Monte Carlo estimator"
        )
    if model.latent.dimension != 1:
        raise UnsupportedAnalytic("analytic IRT coefficients need a unidimensional model")


def pattern_moments(model, grid: QuadratureGrid | None = None,
                    cap: int = PATTERN_CAP) -> PatternMoments:
    _require_unidimensional(model)
    grid = build_grid(model.latent) if grid is None else grid
    patterns = enumerate_patterns(model, cap)
    eta = grid.nodes[:, 0]
    second = lambda pts: pts[:, 0] ** 2  # noqa: E731
    probs, post = posterior_table(
        model, patterns, grid, [Score.lv(0), Score.true_summed(), second], check=False
    )
    eap, eap_ts, eap_sq = post[:, 0], post[:, 1], post[:, 2]
    lik = np.exp(kernels.loglik_rows(patterns, model.log_category_probs(grid.nodes)))
    return PatternMoments(
        patterns=patterns,
        probability=probs,
        eap=eap,
        eap_true_summed=eap_ts,
        summed=model.summed_scores(patterns),
        posterior_variance=np.maximum(eap_sq - eap**2, 0.0),
        true_eap=eap @ lik,
        true_summed=np.asarray(model.expected_summed(grid.nodes), dtype=float),
        grid=grid,
        latent_variance=float(model.latent.covariance[0, 0]),
    )


def _ratio(num: float, den: float) -> float:
    return 0.0 if den <= 0.0 else num / den


def reliability_eap_2pl(model, grid: QuadratureGrid | None = None, cap: int = PATTERN_CAP) -> float:
    """``Var(E(eap | eta)) / Var(eap)``."""
    mom = pattern_moments(model, grid, cap)
    return _ratio(mom.var_true_eap, mom.var_eap)


def reliability_summed_2pl(model, grid: QuadratureGrid | None = None, cap: int = PATTERN_CAP) -> float:
    """``Var(tau_s) / Var(s)``."""
    mom = pattern_moments(model, grid, cap)
    return _ratio(mom.var_true_summed, mom.var_summed)


def prmse_lv_2pl(model, grid: QuadratureGrid | None = None, cap: int = PATTERN_CAP) -> float:
    """``Var(eap) / psi``."""
    mom = pattern_moments(model, grid, cap)
    return _ratio(mom.var_eap, mom.latent_variance)


def prmse_true_summed_2pl(model, grid: QuadratureGrid | None = None, cap: int = PATTERN_CAP) -> float:
    """``Var(E(tau_s | y)) / Var(tau_s)``."""
    mom = pattern_moments(model, grid, cap)
    return _ratio(mom.var_eap_true_summed, mom.var_true_summed)


def analytic_coefficients(model, grid: QuadratureGrid | None = None,
                          cap: int = PATTERN_CAP) -> dict[str, float]:
    """All four coefficients from a single pattern enumeration."""
    mom = pattern_moments(model, grid, cap)
    return {
        "reliability_eap": _ratio(mom.var_true_eap, mom.var_eap),
        "reliability_summed": _ratio(mom.var_true_summed, mom.var_summed),
        "prmse_lv": _ratio(mom.var_eap, mom.latent_variance),
        "prmse_true_summed": _ratio(mom.var_eap_true_summed, mom.var_true_summed),
    }


def quadrature_stability(model, nodes=(61, 121), cap: int = PATTERN_CAP) -> dict[str, float]:
    """Largest change of each coefficient when the grid is refined."""
    results = [analytic_coefficients(model, build_grid(model.latent, n), cap) for n in nodes]
    return {
        key: max(abs(r[key] - results[0][key]) for r in results[1:])
        for key in results[0]
    }
