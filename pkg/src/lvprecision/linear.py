"""Closed-form precision coefficients for the linear factor model.

The unidimensional formulas (regression factor score, coefficient omega,
PRMSE of the factor and of the true summed score) are exact.  For d > 1,
``reliability_linear_score`` gives the variance ratio of an arbitrary linear
composite ``w'y``, and ``posterior_mean_weights`` the multivariate
regression-score weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DegenerateSum, NonPSDCovariance, ShapeMismatch, SingularTheta, ValidationError
from .models import LinearFactorModel

_MAX_COND = 1e12


@dataclass(frozen=True)
class LinearScoreWeights:
    """Linear observed score ``weights @ y + offset``."""

    weights: np.ndarray
    offset: float

    def __call__(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y) @ self.weights + self.offset


def _require_linear(model, one_factor=True) -> None:
    if not isinstance(model, LinearFactorModel):
        raise ValidationError("expected a LinearFactorModel")
    if one_factor and model.latent.dimension != 1:
        raise ValidationError("this formula needs a one-factor model (d = 1)")


def _theta_factor(theta: np.ndarray):
    if np.linalg.cond(theta) > _MAX_COND:
        raise SingularTheta("unique covariance is numerically singular")
    return cho_factor(theta, lower=True)


def _information(model: LinearFactorModel) -> float:
    """``lambda' Theta^{-1} lambda`` for a one-factor model."""
    lam = model.loadings[:, 0]
    return float(lam @ cho_solve(_theta_factor(model.unique_covariance), lam))


def _shrinkage(model: LinearFactorModel) -> float:
    """``q / (q + 1/psi)`` with ``q`` the factor information."""
    psi = float(model.latent.covariance[0, 0])
    if psi == 0.0:
        return 0.0
    q = _information(model)
    return q / (q + 1.0 / psi)


def regression_score_weights(model: LinearFactorModel) -> LinearScoreWeights:
    """Weights of the regression factor score (the EAP of the factor)."""
    _require_linear(model)
    lam = model.loadings[:, 0]
    psi = float(model.latent.covariance[0, 0])
    mu = float(model.latent.mean[0])
    if psi == 0.0:
        return LinearScoreWeights(np.zeros_like(lam), mu)
    tinv_lam = cho_solve(_theta_factor(model.unique_covariance), lam)
    w = tinv_lam / (lam @ tinv_lam + 1.0 / psi)
    offset = mu - float(w @ (model.intercepts + lam * mu))
    return LinearScoreWeights(w, offset)


def posterior_mean_weights(model: LinearFactorModel) -> tuple[np.ndarray, np.ndarray]:
    """``(K, b)`` such that ``E(eta | y) = K @ y + b`` for any dimension.

    ``K = Psi Lambda' Sigma^{-1}`` with ``Sigma`` the implied covariance.
    """
    _require_linear(model, one_factor=False)
    _theta_factor(model.unique_covariance)
    lam, psi, mu = model.loadings, model.latent.covariance, model.latent.mean
    sigma = model.implied_covariance()
    gain = np.linalg.solve(sigma, lam @ psi).T
    offset = mu - gain @ (model.intercepts + lam @ mu)
    return gain, offset


def true_eap_slope(model: LinearFactorModel) -> float:
    """Slope of ``E(eap | eta)`` on ``eta`` for the one-factor model."""
    _require_linear(model)
    return _shrinkage(model)


def eap_variance_factor(model: LinearFactorModel) -> float:
    """``Var`` of the regression factor score."""
    _require_linear(model)
    return float(model.latent.covariance[0, 0]) * _shrinkage(model)


def reliability_eap_factor(model: LinearFactorModel) -> float:
    _require_linear(model)
    psi = float(model.latent.covariance[0, 0])
    r = _shrinkage(model)
    var_obs = psi * r
    if var_obs == 0.0:
        return 0.0
    return psi * r**2 / var_obs


def prmse_lv_factor(model: LinearFactorModel) -> float:
    _require_linear(model)
    psi = float(model.latent.covariance[0, 0])
    if psi == 0.0:
        return 0.0
    return eap_variance_factor(model) / psi


def prmse_true_summed_factor(model: LinearFactorModel) -> float:
    """PRMSE of ``1'(nu + lambda eta)``; equals ``prmse_lv_factor`` whenever ``1'lambda != 0``."""
    _require_linear(model)
    scale = float(model.loadings[:, 0].sum()) ** 2
    psi = float(model.latent.covariance[0, 0])
    if scale * psi == 0.0:
        return 0.0
    return scale * eap_variance_factor(model) / (scale * psi)


def eap_of_true_summed_factor(model: LinearFactorModel, eta_tilde):
    """EAP of the true summed score from the regression factor score."""
    _require_linear(model)
    lam = model.loadings[:, 0]
    return model.intercepts.sum() + lam.sum() * np.asarray(eta_tilde, dtype=float)


def true_summed_variance(model: LinearFactorModel) -> float:
    ones = np.ones(model.n_items)
    lam = model.loadings
    return float(ones @ lam @ model.latent.covariance @ lam.T @ ones)


def summed_variance(model: LinearFactorModel) -> float:
    ones = np.ones(model.n_items)
    return true_summed_variance(model) + float(ones @ model.unique_covariance @ ones)


def reliability_summed_factor(model: LinearFactorModel) -> float:
    """Coefficient omega: reliability of the unweighted sum."""
    _require_linear(model, one_factor=False)
    true_var = true_summed_variance(model)
    total = summed_variance(model)
    return true_var / total


def reliability_linear_score(model: LinearFactorModel, weights) -> float:
    """Reliability of ``w'y``: ``w'Lambda Psi Lambda'w / w'Sigma w``."""
    _require_linear(model, one_factor=False)
    w = np.asarray(weights, dtype=float)
    if w.shape != (model.n_items,):
        raise ShapeMismatch(f"weights must have length {model.n_items}")
    lam = model.loadings
    true_var = float(w @ lam @ model.latent.covariance @ lam.T @ w)
    total = float(w @ model.implied_covariance() @ w)
    if total <= 0.0:
        raise DegenerateSum("score has zero variance")
    return true_var / total


def coefficient_alpha(covariance) -> float:
    """Cronbach's alpha from an item covariance matrix."""
    cov = np.asarray(covariance, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ShapeMismatch("covariance must be a square matrix")
    m = cov.shape[0]
    if m < 2:
        raise ShapeMismatch("alpha needs at least two items")
    if not np.allclose(cov, cov.T, atol=1e-10):
        raise NonPSDCovariance("covariance is not symmetric")
    total = float(cov.sum())
    if total <= 0.0:
        raise DegenerateSum("variance of the summed score is zero")
    return m / (m - 1.0) * (1.0 - float(np.trace(cov)) / total)
