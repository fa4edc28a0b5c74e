"""Regressions whose coefficient of determination estimates a precision coefficient.

Every fit has an intercept, so ``R^2 = 1 - SSE/SST`` equals the ratio of the
fitted-value variance to the outcome variance.  Sums of squares are
accumulated block-wise with the pairwise (Chan et al.) update, which keeps
them accurate for ``n = 10^6`` and makes them insensitive to row order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import BSpline
from scipy.linalg import qr, solve_triangular

from .errors import DegenerateOutcome, DegenerateRegressor, IllConditionedBasis, ValidationError
from .models import unique_patterns

_BLOCK = 2**16
_MAX_COND = 1e10
_Z95 = 1.959963984540054


class RunningMoments:
    """Streaming mean and co-moment matrix of a set of columns."""

    def __init__(self, k: int = 1):
        self.n = 0
        self.mean = np.zeros(k)
        self.comoment = np.zeros((k, k))

    def update(self, block) -> "RunningMoments":
        block = np.asarray(block, dtype=float)
        if block.ndim == 1:
            block = block[:, None]
        nb = block.shape[0]
        if nb == 0:
            return self
        mb = block.mean(axis=0)
        centred = block - mb
        cb = centred.T @ centred
        n = self.n + nb
        delta = mb - self.mean
        self.comoment += cb + np.outer(delta, delta) * (self.n * nb / n)
        self.mean = self.mean + delta * (nb / n)
        self.n = n
        return self

    @classmethod
    def of(cls, *columns, block: int = _BLOCK) -> "RunningMoments":
        data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
        acc = cls(data.shape[1])
        for start in range(0, data.shape[0], block):
            acc.update(data[start : start + block])
        return acc

    def variance(self, ddof: int = 0) -> np.ndarray:
        return np.diag(self.comoment) / (self.n - ddof)

    @property
    def sum_squares(self) -> np.ndarray:
        return np.diag(self.comoment).copy()


@dataclass(frozen=True, eq=False)
class RegressionFit:
    r_squared: float
    fitted_variance: float
    residual_variance: float
    regressor: str
    n: int
    method: str
    half_width: float
    intercept: float | None = None
    slope: float | None = None
    predictor: Callable | None = field(default=None, repr=False)

    def predict(self, x):
        if self.predictor is None:
            raise ValidationError(f"{self.method} fit has no prediction function")
        return self.predictor(x)


def _outcome_moments(y: np.ndarray) -> RunningMoments:
    mom = RunningMoments.of(y)
    if mom.n < 2 or mom.sum_squares[0] <= 1e-14 * max(1.0, mom.mean[0] ** 2) * mom.n:
        raise DegenerateOutcome("outcome has zero variance")
    return mom


def delta_half_width(outcome, fitted, r_squared: float) -> float:
    """95% half-width of ``R^2 = 1 - mean(e^2) / mean((y - ybar)^2)`` by the delta method."""
    y = np.asarray(outcome, dtype=float)
    e2 = (y - np.asarray(fitted, dtype=float)) ** 2
    b = (y - y.mean()) ** 2
    influence = e2 - (1.0 - r_squared) * b
    return float(_Z95 * influence.std() / (np.sqrt(y.size) * b.mean()))


def _finish(y, fitted, mom, method, regressor, **extra) -> RegressionFit:
    resid = y - fitted
    sse = float(np.dot(resid, resid))
    sst = float(mom.sum_squares[0])
    r2 = min(1.0, max(0.0, 1.0 - sse / sst))
    n = y.size
    return RegressionFit(
        r_squared=r2,
        fitted_variance=float(RunningMoments.of(fitted).variance()[0]),
        residual_variance=sse / n,
        regressor=regressor,
        n=n,
        method=method,
        half_width=delta_half_width(y, fitted, r2),
        **extra,
    )


def _as_outcome(outcome) -> np.ndarray:
    y = np.asarray(outcome, dtype=float)
    if y.ndim != 1:
        raise ValidationError("outcome must be one-dimensional")
    if not np.all(np.isfinite(y)):
        raise ValidationError("outcome contains non-finite values")
    return y


def fit_pattern_means(outcome, patterns, groups=None) -> RegressionFit:
    """Saturated regression on the distinct response patterns (cell means).

    ``groups`` may pass a precomputed ``unique_patterns(patterns)`` result.
    """
    y = _as_outcome(outcome)
    if groups is None:
        pats = np.asarray(patterns)
        if pats.ndim == 1:
            pats = pats[:, None]
        if pats.shape[0] != y.size:
            raise ValidationError("outcome and patterns differ in length")
        groups = unique_patterns(pats)
    uniq, inverse = groups
    if y.size < 2:
        raise ValidationError("need at least two observations")
    if uniq.shape[0] < 2:
        raise DegenerateRegressor("all rows share one response pattern")
    mom = _outcome_moments(y)
    counts = np.bincount(inverse, minlength=uniq.shape[0])
    means = np.bincount(inverse, weights=y - mom.mean[0], minlength=uniq.shape[0]) / counts
    fitted = means[inverse] + mom.mean[0]
    return _finish(y, fitted, mom, "pattern_means", f"{uniq.shape[0]} response patterns")


def fit_simple_linear(outcome, regressor, name: str = "x") -> RegressionFit:
    y = _as_outcome(outcome)
    x = np.asarray(regressor, dtype=float)
    if x.shape != y.shape:
        raise ValidationError("outcome and regressor differ in length")
    if y.size < 3:
        raise ValidationError("simple linear regression needs n >= 3")
    mom = RunningMoments.of(x, y)
    sxx, syy = mom.comoment[0, 0], mom.comoment[1, 1]
    if sxx <= 1e-14 * max(1.0, mom.mean[0] ** 2) * mom.n:
        raise DegenerateRegressor("regressor has zero variance")
    if syy <= 1e-14 * max(1.0, mom.mean[1] ** 2) * mom.n:
        raise DegenerateOutcome("outcome has zero variance")
    slope = mom.comoment[0, 1] / sxx
    intercept = mom.mean[1] - slope * mom.mean[0]
    fitted = intercept + slope * x
    y_mom = RunningMoments(1)
    y_mom.n, y_mom.mean, y_mom.comoment = mom.n, mom.mean[1:], mom.comoment[1:, 1:]
    return _finish(
        y, fitted, y_mom, "simple_linear", name,
        intercept=float(intercept), slope=float(slope),
        predictor=lambda v: intercept + slope * np.asarray(v, dtype=float),
    )


def fit_linear(outcome, regressors, name: str = "X") -> RegressionFit:
    """Ordinary least squares with intercept on several regressors."""
    y = _as_outcome(outcome)
    x = np.asarray(regressors, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != y.size:
        raise ValidationError("outcome and regressors differ in length")
    mom = RunningMoments.of(*x.T, y)
    k = x.shape[1]
    sxx, sxy = mom.comoment[:k, :k], mom.comoment[:k, k]
    if np.linalg.cond(sxx) > 1e12:
        raise DegenerateRegressor("regressors are collinear")
    beta = np.linalg.solve(sxx, sxy)
    intercept = float(mom.mean[k] - mom.mean[:k] @ beta)
    fitted = intercept + x @ beta
    y_mom = RunningMoments(1)
    y_mom.n, y_mom.mean, y_mom.comoment = mom.n, mom.mean[k:], mom.comoment[k:, k:]
    return _finish(
        y, fitted, y_mom, "linear", name, intercept=intercept,
        predictor=lambda v: intercept + np.atleast_2d(np.asarray(v, dtype=float)) @ beta,
    )


@dataclass(frozen=True, eq=False)
class SplineBasis:
    """Cubic B-spline basis, tensor product over columns."""

    knots: tuple

    @classmethod
    def from_data(cls, x: np.ndarray, df: int) -> "SplineBasis":
        if df < 4:
            raise ValidationError("cubic splines need df >= 4")
        knots = []
        for col in x.T:
            interior = np.quantile(col, np.linspace(0, 1, df - 2)[1:-1])
            lo, hi = col.min(), col.max()
            if not hi > lo:
                raise IllConditionedBasis("a regressor is constant")
            interior = np.unique(interior[(interior > lo) & (interior < hi)])
            knots.append(np.concatenate([[lo] * 4, interior, [hi] * 4]))
        return cls(tuple(knots))

    @property
    def size(self) -> int:
        return int(np.prod([t.size - 4 for t in self.knots]))

    def design(self, x: np.ndarray) -> np.ndarray:
        out = None
        for t, col in zip(self.knots, np.atleast_2d(x).T):
            col = np.clip(col, t[0], t[-1])
            b = BSpline.design_matrix(col, t, 3).toarray()
            out = b if out is None else (out[:, :, None] * b[:, None, :]).reshape(col.size, -1)
        return out


def fit_spline_surface(outcome, regressors, df_per_dim: int = 8, name: str = "eta") -> RegressionFit:
    """Least squares on a cubic B-spline basis (tensor product for two regressors).

    Interior knots sit at empirical quantiles.  The basis spans constants, so
    no separate intercept column is needed.  The system is solved by a
    blocked QR of ``[B y]``.
    """
    y = _as_outcome(outcome)
    x = np.asarray(regressors, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != y.size:
        raise ValidationError("outcome and regressors differ in length")
    if x.shape[1] not in (1, 2):
        raise ValidationError("spline regression supports one or two regressors")
    basis = SplineBasis.from_data(x, df_per_dim)
    p = basis.size
    if y.size < 2 * p:
        raise IllConditionedBasis(f"n={y.size} is too small for {p} basis functions")
    mom = _outcome_moments(y)
    ybar = mom.mean[0]
    r = np.zeros((0, p + 1))
    for start in range(0, y.size, _BLOCK):
        rows = slice(start, start + _BLOCK)
        block = np.column_stack([basis.design(x[rows]), y[rows] - ybar])
        r = qr(np.vstack([r, block]), mode="r", check_finite=False)[0][: p + 1]
    r_b = r[:p, :p]
    diag = np.abs(np.diag(r_b))
    if diag.min() <= diag.max() / _MAX_COND:
        raise IllConditionedBasis("spline basis columns are nearly collinear")
    coef = solve_triangular(r_b, r[:p, p])

    def predict(v):
        v = np.asarray(v, dtype=float)
        v = v[:, None] if v.ndim == 1 else v
        return basis.design(v) @ coef + ybar

    fitted = np.concatenate([
        basis.design(x[start : start + _BLOCK]) @ coef for start in range(0, y.size, _BLOCK)
    ]) + ybar
    return _finish(y, fitted, mom, "spline", f"spline({name}, df={df_per_dim})", predictor=predict)


@dataclass(frozen=True)
class PrecisionReport:
    """A reliability or PRMSE value with how it was obtained."""

    value: float
    kind: str
    method: str
    n: int | None = None
    seed: int | None = None
    model_hash: str | None = None
    diagnostics: tuple = ()

    def diagnostic(self, key, default=None):
        return dict(self.diagnostics).get(key, default)


_METHODS = {
    "pattern_means": "mc-nonparametric",
    "spline": "mc-nonparametric",
    "linear": "mc-nonparametric",
    "simple_linear": "mc-simple-linear",
}


def r_squared_report(fit: RegressionFit, kind: str, seed: int | None = None,
                     model=None, **diagnostics) -> PrecisionReport:
    if kind not in ("reliability", "prmse"):
        raise ValidationError(f"kind must be 'reliability' or 'prmse', got {kind!r}")
    from .config import model_hash

    diag = {
        "regressor": fit.regressor,
        "fit": fit.method,
        "half_width": fit.half_width,
        "fitted_variance": fit.fitted_variance,
        "residual_variance": fit.residual_variance,
    }
    if fit.slope is not None:
        diag["slope"] = fit.slope
        diag["intercept"] = fit.intercept
    diag.update(diagnostics)
    return PrecisionReport(
        value=fit.r_squared,
        kind=kind,
        method=_METHODS[fit.method],
        n=fit.n,
        seed=seed,
        model_hash=None if model is None else model_hash(model),
        diagnostics=tuple(sorted(diag.items())),
    )
