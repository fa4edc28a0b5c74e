"""The Monte Carlo regression estimator of reliability and PRMSE.

Step 1 simulates latent and manifest vectors.  Step 2 regresses the
observed score on the latent variables (reliability) or the latent score on
the manifest variables (PRMSE) with a nonparametric fit; Step 2' replaces it
by a simple linear regression on the true score or on the EAP score.  Step 3
reports the coefficient of determination.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import PatternSpaceTooLarge, ValidationError
from .models import LinearFactorModel, Score, is_discrete
from .quadrature import DEFAULT_NODES, DEFAULT_RANGE, PATTERN_CAP, build_grid
from .regression import (
    PrecisionReport,
    fit_linear,
    fit_pattern_means,
    fit_simple_linear,
    fit_spline_surface,
    r_squared_report,
)
from .simulation import McSample, compute_true_scores, simulate

METHODS = ("auto", "nonparametric", "simple_linear")
MIN_N = 1000
# saturated pattern-mean fits need many rows per cell to keep the upward
# bias of R^2 (about G / n) negligible
ROWS_PER_PATTERN = 1000


@dataclass(frozen=True)
class McConfig:
    n: int = 10**6
    seed: int = 0
    method: str = "auto"
    nodes: int = DEFAULT_NODES
    lo: float = DEFAULT_RANGE[0]
    hi: float = DEFAULT_RANGE[1]
    rule: str = "rectangular"
    df: int = 8
    cap: int = PATTERN_CAP

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            raise ValidationError(f"n must be an integer, got {self.n!r}")
        if self.n < MIN_N:
            raise ValidationError(f"n must be at least {MIN_N}, got {self.n}")
        if self.n < 10**5:
            warnings.warn(f"n={self.n} is small; MC error may exceed 0.005", RuntimeWarning, stacklevel=3)
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.df < 4:
            raise ValidationError("spline df must be at least 4")

    def grid(self, model):
        if model.latent.dimension > 2 or not is_discrete(model):
            return None
        return build_grid(model.latent, self.nodes, self.lo, self.hi, self.rule)


def _sample(model, cfg: McConfig, sample: McSample | None) -> McSample:
    if sample is None:
        return simulate(model, cfg.n, cfg.seed)
    if sample.model is not model and sample.model != model:
        raise ValidationError("sample was drawn from a different model")
    return sample


def estimate_reliability(model, score: Score, cfg: McConfig = McConfig(),
                         sample: McSample | None = None) -> PrecisionReport:
    """Reliability of an observed score as the R^2 of its regression on the LVs."""
    if not score.is_observed:
        raise ValidationError(f"reliability needs an observed score, got {score.label}")
    score.check_for(model)
    sample = _sample(model, cfg, sample)
    grid = cfg.grid(model)
    x = sample.observed(score, grid)
    d = model.latent.dimension
    method = cfg.method
    if method == "auto":
        method = "nonparametric" if d <= 2 else "simple_linear"
    if method == "nonparametric":
        if d > 2:
            raise ValidationError("spline regression supports d <= 2; use method simple_linear")
        fit = fit_spline_surface(x, sample.latents, cfg.df)
    else:
        tau = compute_true_scores(model, sample.latents, score, grid)
        fit = fit_simple_linear(x, tau, name=f"true score of {score.label}")
    return r_squared_report(fit, "reliability", cfg.seed, model, score=score.label)


def _prmse_method(model, cfg: McConfig, n: int) -> str:
    if cfg.method != "auto":
        return cfg.method
    if isinstance(model, LinearFactorModel):
        return "simple_linear"
    if model.n_patterns() <= min(cfg.cap, n // ROWS_PER_PATTERN):
        return "nonparametric"
    return "simple_linear"


def estimate_prmse(model, latent_score: Score, cfg: McConfig = McConfig(),
                   sample: McSample | None = None) -> PrecisionReport:
    """PRMSE of a latent score as the R^2 of its regression on the MVs."""
    if latent_score.is_observed:
        raise ValidationError(f"PRMSE needs a latent score, got {latent_score.label}")
    latent_score.check_for(model)
    sample = _sample(model, cfg, sample)
    grid = cfg.grid(model)
    xi = sample.latent(latent_score, grid)
    method = _prmse_method(model, cfg, sample.n)
    extra = {"score": latent_score.label}
    if method == "nonparametric":
        if isinstance(model, LinearFactorModel):
            # E(xi | y) is linear in y for the linear factor model
            fit = fit_linear(xi, sample.responses, name="y")
        else:
            count = model.n_patterns()
            if count > cfg.cap:
                raise PatternSpaceTooLarge(
                    f"{count} response patterns exceed the cap of {cfg.cap}; use method simple_linear"
                )
            fit = fit_pattern_means(xi, sample.responses, sample.groups())
    else:
        eap = sample.observed(Score.eap(latent_score), grid)
        fit = fit_simple_linear(xi, eap, name=f"eap({latent_score.label})")
        if is_discrete(model):
            extra["pattern_space"] = model.n_patterns()
    return r_squared_report(fit, "prmse", cfg.seed, model, **extra)


def estimate(model, score: Score, cfg: McConfig = McConfig(),
             sample: McSample | None = None) -> PrecisionReport:
    """Reliability for observed scores, PRMSE for latent scores."""
    if score.is_observed:
        return estimate_reliability(model, score, cfg, sample)
    return estimate_prmse(model, score, cfg, sample)


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    r_squared: float
    half_width: float


def convergence_diagnostic(model, score: Score, cfg: McConfig = McConfig(),
                           n_grid=(10**3, 10**4, 10**5, 10**6)) -> list[ConvergenceRow]:
    """R^2 and its delta-method 95% half-width at each sample size.

    Each size gets its own sample drawn with ``cfg.seed``.
    """
    n_grid = [int(n) for n in n_grid]
    if not n_grid or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValidationError("n_grid must be a non-empty ascending list")
    rows = []
    for n in n_grid:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sub = McConfig(n, cfg.seed, cfg.method, cfg.nodes, cfg.lo, cfg.hi, cfg.rule, cfg.df, cfg.cap)
        report = estimate(model, score, sub)
        rows.append(ConvergenceRow(n, report.value, report.diagnostic("half_width")))
    return rows
