"""Measurement models with known parameters, and score definitions.

Four model families are supported:

* ``LinearFactorModel``: continuous indicators, y = nu + Lambda eta + eps.
* ``TwoPLModel``: dichotomous indicators with logistic item response functions.
* ``GradedResponseModel``: ordinal indicators, cumulative-logit graded response.
* ``HurdleIrtreeModel``: two-stage IRTree (presence / frequency) with a
  susceptibility and a severity latent variable.

All discrete models expose the same small protocol used by the quadrature,
simulation and estimation code:

``n_columns``
    number of manifest columns in a response pattern.
``n_categories``
    tuple with the category count of each column.
``log_category_probs(eta)``
    array ``(n_columns, max_categories, n_points)`` of conditional log
    probabilities ``log P(y_j = k | eta)``; padding entries are ``-inf``.
``pattern_blocks()``
    per independent block of columns, the admissible code tuples.  The
    admissible pattern space is the Cartesian product of the blocks.
``simulate(eta, rng)``
    draw one response pattern per row of ``eta``.

Patterns are integer arrays with 0-based category codes; ``-1`` marks a
structurally missing entry (hurdle stage 2 when stage 1 is 0).

Instances are immutable: arrays are copied and flagged read-only when the
object is built, and every invariant is checked at construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import expit, log_expit

from .errors import (
    InadmissiblePattern,
    NonMonotoneThresholds,
    NonPSDCovariance,
    ShapeMismatch,
    ValidationError,
)

MISSING = -1

_SYM_TOL = 1e-10
_PSD_TOL = 1e-10


def _frozen_array(value, ndim=None, name="array") -> np.ndarray:
    arr = np.array(value, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ShapeMismatch(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def _check_psd(mat: np.ndarray, name: str) -> None:
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ShapeMismatch(f"{name} must be square, got shape {mat.shape}")
    scale = max(1.0, float(np.max(np.abs(mat))) if mat.size else 1.0)
    if not np.allclose(mat, mat.T, atol=_SYM_TOL * scale, rtol=0.0):
        raise NonPSDCovariance(f"{name} is not symmetric")
    if mat.size == 0:
        return
    eig = np.linalg.eigvalsh(mat)
    if eig[0] < -_PSD_TOL * scale:
        raise NonPSDCovariance(
            f"{name} is not positive semi-definite (smallest eigenvalue {eig[0]:.3g})"
        )


class _ArrayEq:
    """Value equality for frozen dataclasses holding numpy arrays."""

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None


@dataclass(frozen=True, eq=False)
class LatentDistribution(_ArrayEq):
    """Multivariate normal distribution of the latent variables."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = _frozen_array(self.mean, 1, "latent mean")
        cov = _frozen_array(np.atleast_2d(self.covariance), 2, "latent covariance")
        if cov.shape != (mean.size, mean.size):
            raise ShapeMismatch(
                f"latent covariance shape {cov.shape} does not match dimension {mean.size}"
            )
        if mean.size < 1:
            raise ShapeMismatch("latent dimension must be at least 1")
        _check_psd(cov, "latent covariance")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @classmethod
    def standard(cls, dimension: int = 1, correlation: float = 0.0) -> "LatentDistribution":
        cov = np.full((dimension, dimension), correlation, dtype=float)
        np.fill_diagonal(cov, 1.0)
        return cls(np.zeros(dimension), cov)

    @property
    def dimension(self) -> int:
        return self.mean.size

    @property
    def sd(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    def cholesky(self) -> np.ndarray:
        """Lower factor ``L`` with ``L @ L.T == covariance``.

        Singular but PSD covariances fall back to an eigen-decomposition with
        negative eigenvalues clipped to zero.
        """
        try:
            return np.linalg.cholesky(self.covariance)
        except np.linalg.LinAlgError:
            warnings.warn(
                "latent covariance is singular; using eigenvalue-clipped factor",
                RuntimeWarning,
                stacklevel=2,
            )
            vals, vecs = np.linalg.eigh(self.covariance)
            return vecs * np.sqrt(np.clip(vals, 0.0, None))


@dataclass(frozen=True, eq=False)
class LinearFactorModel(_ArrayEq):
    """Linear common factor model ``y = nu + Lambda eta + eps``, ``eps ~ N(0, Theta)``."""

    intercepts: np.ndarray
    loadings: np.ndarray
    unique_covariance: np.ndarray
    latent: LatentDistribution = field(default_factory=LatentDistribution.standard)

    def __post_init__(self):
        nu = _frozen_array(self.intercepts, 1, "intercepts")
        lam = np.array(self.loadings, dtype=float)
        if lam.ndim == 1:
            lam = lam[:, None]
        lam = _frozen_array(lam, 2, "loadings")
        theta = np.array(self.unique_covariance, dtype=float)
        if theta.ndim == 1:
            theta = np.diag(theta)
        theta = _frozen_array(theta, 2, "unique covariance")
        m = nu.size
        if lam.shape != (m, self.latent.dimension):
            raise ShapeMismatch(
                f"loadings shape {lam.shape} inconsistent with m={m}, d={self.latent.dimension}"
            )
        if theta.shape != (m, m):
            raise ShapeMismatch(f"unique covariance shape {theta.shape} inconsistent with m={m}")
        if np.any(np.diag(theta) <= 0):
            raise NonPSDCovariance("unique variances must be strictly positive")
        _check_psd(theta, "unique covariance")
        object.__setattr__(self, "intercepts", nu)
        object.__setattr__(self, "loadings", lam)
        object.__setattr__(self, "unique_covariance", theta)

    @property
    def n_items(self) -> int:
        return self.intercepts.size

    n_columns = n_items

    def implied_covariance(self) -> np.ndarray:
        lam = self.loadings
        return lam @ self.latent.covariance @ lam.T + self.unique_covariance

    def expected_response(self, eta: np.ndarray) -> np.ndarray:
        eta = np.atleast_2d(eta)
        return self.intercepts + eta @ self.loadings.T

    def expected_summed(self, eta: np.ndarray) -> np.ndarray:
        return self.expected_response(eta).sum(axis=1)

    def simulate(self, eta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        eta = np.atleast_2d(eta)
        chol = np.linalg.cholesky(self.unique_covariance)
        eps = rng.standard_normal((eta.shape[0], self.n_items)) @ chol.T
        return self.expected_response(eta) + eps


class _DiscreteModel:
    """Shared helpers for the categorical models."""

    @property
    def max_categories(self) -> int:
        return max(self.n_categories, default=2)

    @property
    def category_values(self) -> list[np.ndarray]:
        """Per column, the contribution of each code to the summed score."""
        return [np.arange(k, dtype=float) for k in self.n_categories]

    def summed_scores(self, patterns: np.ndarray) -> np.ndarray:
        patterns = np.atleast_2d(patterns)
        return np.where(patterns > 0, patterns, 0).sum(axis=1).astype(float)

    def n_patterns(self) -> int:
        return math.prod(len(block) for block in self.pattern_blocks())

    def check_patterns(self, patterns: np.ndarray) -> np.ndarray:
        patterns = np.atleast_2d(np.asarray(patterns))
        if patterns.shape[1] != self.n_columns:
            raise InadmissiblePattern(
                f"pattern has {patterns.shape[1]} entries, model has {self.n_columns} columns"
            )
        if not np.issubdtype(patterns.dtype, np.integer):
            if not np.all(patterns == np.round(patterns)):
                raise InadmissiblePattern("category codes must be integers")
            patterns = patterns.astype(np.int64)
        kmax = np.asarray(self.n_categories)
        bad_range = (patterns < MISSING) | (patterns >= kmax)
        if np.any(bad_range):
            raise InadmissiblePattern("category code outside the item's range")
        self._check_missingness(patterns)
        return patterns

    def _check_missingness(self, patterns: np.ndarray) -> None:
        if np.any(patterns == MISSING):
            raise InadmissiblePattern("this model has no structurally missing entries")

    def column_axes(self) -> np.ndarray | None:
        """Latent axis each column loads on, or None without simple structure.

        Columns with all-zero slopes are assigned to axis 0.
        """
        nonzero = self.column_slopes() != 0.0
        if np.any(nonzero.sum(axis=1) > 1):
            return None
        return np.argmax(nonzero, axis=1)


def _as_slopes(value, m: int, d: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 1 and d == 1:
        arr = arr[:, None]
    arr = _frozen_array(arr, 2, name)
    if arr.shape != (m, d):
        raise ShapeMismatch(f"{name} shape {arr.shape} inconsistent with m={m}, d={d}")
    return arr


@dataclass(frozen=True, eq=False)
class TwoPLModel(_ArrayEq, _DiscreteModel):
    """Two-parameter logistic model, ``P(y_j = 1 | eta) = logistic(alpha_j + beta_j' eta)``."""

    intercepts: np.ndarray
    slopes: np.ndarray
    latent: LatentDistribution = field(default_factory=LatentDistribution.standard)

    def __post_init__(self):
        alpha = _frozen_array(self.intercepts, 1, "intercepts")
        beta = _as_slopes(self.slopes, alpha.size, self.latent.dimension, "slopes")
        object.__setattr__(self, "intercepts", alpha)
        object.__setattr__(self, "slopes", beta)

    @property
    def n_items(self) -> int:
        return self.intercepts.size

    n_columns = n_items

    @property
    def n_categories(self) -> tuple[int, ...]:
        return (2,) * self.n_items

    def logits(self, eta: np.ndarray) -> np.ndarray:
        """``(n_items, n_points)`` array of ``alpha_j + beta_j' eta``."""
        eta = np.atleast_2d(eta)
        return self.intercepts[:, None] + self.slopes @ eta.T

    def log_category_probs(self, eta: np.ndarray) -> np.ndarray:
        z = self.logits(eta)
        return np.stack([log_expit(-z), log_expit(z)], axis=1)

    def expected_summed(self, eta: np.ndarray) -> np.ndarray:
        return expit(self.logits(eta)).sum(axis=0)

    def column_slopes(self) -> np.ndarray:
        return self.slopes

    def pattern_blocks(self) -> list[list[tuple[int, ...]]]:
        return [[(0,), (1,)] for _ in range(self.n_items)]

    def simulate(self, eta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        p = expit(self.logits(eta)).T
        return (rng.random(p.shape) < p).astype(np.int8)


@dataclass(frozen=True, eq=False)
class GradedItem(_ArrayEq):
    """One cumulative-logit graded item, ``P(y >= k | eta) = logistic(a' eta - c_k)``.

    ``thresholds`` holds ``c_1 < ... < c_{K-1}``; codes run from 0 to K-1.
    """

    slopes: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        a = _frozen_array(np.atleast_1d(self.slopes), 1, "item slopes")
        c = _frozen_array(np.atleast_1d(self.thresholds), 1, "item thresholds")
        if c.size < 1:
            raise ShapeMismatch("a graded item needs at least one threshold (K >= 2)")
        if np.any(np.diff(c) <= 0):
            raise NonMonotoneThresholds(f"thresholds must be strictly increasing, got {c.tolist()}")
        object.__setattr__(self, "slopes", a)
        object.__setattr__(self, "thresholds", c)

    @property
    def n_categories(self) -> int:
        return self.thresholds.size + 1

    def log_probs(self, eta: np.ndarray) -> np.ndarray:
        """``(K, n_points)`` log category probabilities."""
        eta = np.atleast_2d(eta)
        z = (eta @ self.slopes)[None, :] - self.thresholds[:, None]  # (K-1, n), decreasing in k
        out = np.empty((self.n_categories, z.shape[1]))
        out[0] = log_expit(-z[0])
        out[-1] = log_expit(z[-1])
        # P(y=k) = s(z_{k-1}) - s(z_k) = s(z_{k-1}) s(-z_k) (1 - exp(z_k - z_{k-1}))
        for k in range(1, self.n_categories - 1):
            hi, lo = z[k - 1], z[k]
            out[k] = log_expit(hi) + log_expit(-lo) + np.log1p(-np.exp(lo - hi))
        return out

    def expected_code(self, eta: np.ndarray) -> np.ndarray:
        eta = np.atleast_2d(eta)
        z = (eta @ self.slopes)[None, :] - self.thresholds[:, None]
        return expit(z).sum(axis=0)

    def simulate(self, eta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        eta = np.atleast_2d(eta)
        z = (eta @ self.slopes)[None, :] - self.thresholds[:, None]
        u = rng.random(eta.shape[0])
        # y = number of cumulative probabilities exceeding u
        return (u[None, :] < expit(z)).sum(axis=0).astype(np.int8)


@dataclass(frozen=True, eq=False)
class GradedResponseModel(_ArrayEq, _DiscreteModel):
    """Independent graded items sharing one latent distribution."""

    items: tuple
    latent: LatentDistribution = field(default_factory=LatentDistribution.standard)

    def __post_init__(self):
        items = tuple(self.items)
        if not items:
            raise ShapeMismatch("a graded response model needs at least one item")
        for j, item in enumerate(items):
            if not isinstance(item, GradedItem):
                raise ValidationError(f"items[{j}] is not a GradedItem")
            if item.slopes.size != self.latent.dimension:
                raise ShapeMismatch(
                    f"items[{j}] has {item.slopes.size} slopes, latent dimension is "
                    f"{self.latent.dimension}"
                )
        object.__setattr__(self, "items", items)

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return self.items == other.items and self.latent == other.latent

    __hash__ = None

    @property
    def n_items(self) -> int:
        return len(self.items)

    n_columns = n_items

    @property
    def n_categories(self) -> tuple[int, ...]:
        return tuple(item.n_categories for item in self.items)

    def log_category_probs(self, eta: np.ndarray) -> np.ndarray:
        n = np.atleast_2d(eta).shape[0]
        out = np.full((self.n_items, self.max_categories, n), -np.inf)
        for j, item in enumerate(self.items):
            out[j, : item.n_categories] = item.log_probs(eta)
        return out

    def expected_summed(self, eta: np.ndarray) -> np.ndarray:
        return sum(item.expected_code(eta) for item in self.items)

    def column_slopes(self) -> np.ndarray:
        return np.stack([item.slopes for item in self.items])

    def pattern_blocks(self) -> list[list[tuple[int, ...]]]:
        return [[(k,) for k in range(item.n_categories)] for item in self.items]

    def simulate(self, eta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return np.stack([item.simulate(eta, rng) for item in self.items], axis=1)


@dataclass(frozen=True, eq=False)
class HurdleIrtreeModel(_ArrayEq, _DiscreteModel):
    """Multidimensional hurdle graded response model.

    Each original item ``y_j in {0, 1, 2, 3}`` is recoded into a presence
    indicator ``pres_j`` (binary, loads on latent 1) and a frequency indicator
    ``freq_j`` (3 categories, loads on latent 2) that is missing when
    ``pres_j == 0``.  Manifest columns are interleaved:
    ``[pres_1, freq_1, pres_2, freq_2, ...]``.  Frequency codes are 0-based,
    so internal code ``c`` stands for original response ``c + 1``.
    """

    presence: tuple
    frequency: tuple
    latent: LatentDistribution = field(default_factory=lambda: LatentDistribution.standard(2))

    def __post_init__(self):
        pres, freq = tuple(self.presence), tuple(self.frequency)
        if len(pres) != len(freq) or not pres:
            raise ShapeMismatch("presence and frequency items must pair up one-to-one")
        if self.latent.dimension != 2:
            raise ShapeMismatch("the hurdle model needs exactly two latent variables")
        sd = self.latent.sd
        if np.any(sd <= 0):
            raise NonPSDCovariance("latent variances must be positive")
        rho = self.latent.covariance[0, 1] / (sd[0] * sd[1])
        if not -1.0 < rho < 1.0:
            raise ValidationError(f"latent correlation must lie in (-1, 1), got {rho}")
        for j, (p, f) in enumerate(zip(pres, freq)):
            if not isinstance(p, GradedItem) or not isinstance(f, GradedItem):
                raise ValidationError(f"item pair {j} must hold GradedItem instances")
            if p.slopes.size != 2 or f.slopes.size != 2:
                raise ShapeMismatch(f"item pair {j}: slopes must have length 2")
            if p.n_categories != 2:
                raise ShapeMismatch(f"presence item {j} must be binary")
            if f.n_categories != 3:
                raise ShapeMismatch(f"frequency item {j} must have 3 categories")
            if p.slopes[1] != 0.0 or f.slopes[0] != 0.0:
                raise ValidationError(
                    f"item pair {j}: presence loads only on latent 1, frequency only on latent 2"
                )
        object.__setattr__(self, "presence", pres)
        object.__setattr__(self, "frequency", freq)

    @classmethod
    def from_arrays(
        cls,
        presence_slopes,
        presence_thresholds,
        frequency_slopes,
        frequency_thresholds,
        correlation: float,
    ) -> "HurdleIrtreeModel":
        pres = tuple(
            GradedItem([a, 0.0], [c]) for a, c in zip(presence_slopes, presence_thresholds)
        )
        freq = tuple(
            GradedItem([0.0, a], list(c)) for a, c in zip(frequency_slopes, frequency_thresholds)
        )
        return cls(pres, freq, LatentDistribution.standard(2, correlation))

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return (
            self.presence == other.presence
            and self.frequency == other.frequency
            and self.latent == other.latent
        )

    __hash__ = None

    @property
    def n_pairs(self) -> int:
        return len(self.presence)

    @property
    def n_columns(self) -> int:
        return 2 * self.n_pairs

    @property
    def n_categories(self) -> tuple[int, ...]:
        return (2, 3) * self.n_pairs

    def log_category_probs(self, eta: np.ndarray) -> np.ndarray:
        n = np.atleast_2d(eta).shape[0]
        out = np.full((self.n_columns, 3, n), -np.inf)
        for j, (p, f) in enumerate(zip(self.presence, self.frequency)):
            out[2 * j, :2] = p.log_probs(eta)
            out[2 * j + 1] = f.log_probs(eta)
        return out

    def summed_scores(self, patterns: np.ndarray) -> np.ndarray:
        """Summed score of the original 0-3 codes: ``sum_j pres_j * (freq_j + 1)``."""
        return original_codes(patterns).sum(axis=1).astype(float)

    def expected_summed(self, eta: np.ndarray) -> np.ndarray:
        total = 0.0
        for p, f in zip(self.presence, self.frequency):
            total = total + np.exp(p.log_probs(eta)[1]) * (1.0 + f.expected_code(eta))
        return total

    def column_slopes(self) -> np.ndarray:
        pairs = zip(self.presence, self.frequency)
        return np.stack([item.slopes for pair in pairs for item in pair])

    def pattern_blocks(self) -> list[list[tuple[int, ...]]]:
        block = [(0, MISSING), (1, 0), (1, 1), (1, 2)]
        return [list(block) for _ in range(self.n_pairs)]

    def _check_missingness(self, patterns: np.ndarray) -> None:
        pres, freq = patterns[:, 0::2], patterns[:, 1::2]
        if np.any(pres == MISSING):
            raise InadmissiblePattern("presence indicators cannot be missing")
        if np.any((pres == 0) != (freq == MISSING)):
            raise InadmissiblePattern("frequency must be missing exactly when presence is 0")

    def simulate(self, eta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = np.atleast_2d(eta).shape[0]
        out = np.empty((n, self.n_columns), dtype=np.int8)
        for j, (p, f) in enumerate(zip(self.presence, self.frequency)):
            pres = p.simulate(eta, rng)
            freq = f.simulate(eta, rng)
            out[:, 2 * j] = pres
            out[:, 2 * j + 1] = np.where(pres == 1, freq, MISSING)
        return out


def original_codes(patterns: np.ndarray) -> np.ndarray:
    """Map interleaved hurdle patterns back to the original 0-3 item codes."""
    patterns = np.atleast_2d(patterns)
    pres, freq = patterns[:, 0::2], patterns[:, 1::2]
    return np.where(pres == 1, freq + 1, 0)


def recode_hurdle(original: np.ndarray) -> np.ndarray:
    """Map original 0-3 item codes to interleaved ``(pres, freq)`` columns."""
    original = np.atleast_2d(np.asarray(original))
    if np.any((original < 0) | (original > 3)):
        raise InadmissiblePattern("original hurdle codes must lie in 0..3")
    out = np.empty((original.shape[0], 2 * original.shape[1]), dtype=np.int8)
    out[:, 0::2] = original > 0
    out[:, 1::2] = np.where(original > 0, original - 1, MISSING)
    return out


def unique_patterns(patterns: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct rows in lexicographic order and the row-to-group index.

    Rows are packed into one int64 key per row when the code range allows,
    which is much faster than a row-wise sort.
    """
    patterns = np.atleast_2d(np.asarray(patterns))
    n, m = patterns.shape
    if n == 0:
        return patterns[:0], np.zeros(0, dtype=np.intp)
    if m == 0:
        return patterns[:1], np.zeros(n, dtype=np.intp)
    lo = int(patterns.min())
    radix = int(patterns.max()) - lo + 1
    if m * math.log2(max(radix, 2)) > 62:
        uniq, inverse = np.unique(patterns, axis=0, return_inverse=True)
        return uniq, inverse.reshape(-1)
    powers = radix ** np.arange(m - 1, -1, -1, dtype=np.int64)
    keys = (patterns.astype(np.int64) - lo) @ powers
    _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    return patterns[first], inverse.reshape(-1)


DiscreteModel = Union[TwoPLModel, GradedResponseModel, HurdleIrtreeModel]
ModelSpec = Union[LinearFactorModel, DiscreteModel]


def is_discrete(model) -> bool:
    return isinstance(model, (TwoPLModel, GradedResponseModel, HurdleIrtreeModel))


def validate_model(spec: ModelSpec) -> ModelSpec:
    """Re-check every invariant of ``spec`` and return it unchanged."""
    if isinstance(spec, GradedResponseModel):
        rebuilt = GradedResponseModel(
            tuple(GradedItem(it.slopes, it.thresholds) for it in spec.items),
            LatentDistribution(spec.latent.mean, spec.latent.covariance),
        )
    elif isinstance(spec, HurdleIrtreeModel):
        rebuilt = HurdleIrtreeModel(
            tuple(GradedItem(it.slopes, it.thresholds) for it in spec.presence),
            tuple(GradedItem(it.slopes, it.thresholds) for it in spec.frequency),
            LatentDistribution(spec.latent.mean, spec.latent.covariance),
        )
    elif isinstance(spec, (LinearFactorModel, TwoPLModel)):
        values = {f.name: getattr(spec, f.name) for f in fields(spec) if f.name != "latent"}
        latent = LatentDistribution(spec.latent.mean, spec.latent.covariance)
        rebuilt = type(spec)(**values, latent=latent)
    else:
        raise ValidationError(f"unknown model type {type(spec).__name__}")
    if rebuilt != spec:
        raise ValidationError("model parameters changed during validation")
    return spec


@dataclass(frozen=True)
class ResponsePattern:
    """A single realised response vector; ``None`` marks a structural NA."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))

    @classmethod
    def from_codes(cls, codes: Sequence[int]) -> "ResponsePattern":
        return cls(tuple(None if int(c) == MISSING else int(c) for c in codes))

    @property
    def codes(self) -> np.ndarray:
        return np.array([MISSING if v is None else v for v in self.values], dtype=np.int64)

    @property
    def missing(self) -> np.ndarray:
        return np.array([v is None for v in self.values], dtype=bool)

    def __len__(self):
        return len(self.values)

    def __str__(self):
        return " ".join("NA" if v is None else str(v) for v in self.values)


def as_codes(y) -> np.ndarray:
    """Coerce a pattern (or a stack of patterns) to an integer code array."""
    if isinstance(y, ResponsePattern):
        return y.codes
    if isinstance(y, (list, tuple)) and any(v is None for v in y):
        return ResponsePattern(tuple(y)).codes
    arr = np.asarray(y)
    if arr.dtype == object:
        arr = np.array([MISSING if v is None else v for v in arr.ravel()]).reshape(arr.shape)
    return arr


_SCORE_KINDS = ("summed", "eap", "lv", "true_summed")


@dataclass(frozen=True)
class Score:
    """Definition of an observed or latent score.

    Observed kinds map response patterns to a number (``summed``, ``eap``);
    latent kinds map latent vectors to a number (``lv``, ``true_summed``).
    Build them with the class methods, e.g. ``Score.eap(Score.lv(0))``.
    """

    kind: str
    index: int | None = None
    target: "Score | None" = None

    def __post_init__(self):
        if self.kind not in _SCORE_KINDS:
            raise ValidationError(f"unknown score kind {self.kind!r}")
        if self.kind == "lv" and (self.index is None or self.index < 0):
            raise ValidationError("lv score needs a non-negative index")
        if self.kind == "eap" and (self.target is None or self.target.is_observed):
            raise ValidationError("eap score needs a latent target score")

    @classmethod
    def summed(cls) -> "Score":
        return cls("summed")

    @classmethod
    def lv(cls, index: int = 0) -> "Score":
        return cls("lv", index=index)

    @classmethod
    def true_summed(cls) -> "Score":
        return cls("true_summed")

    @classmethod
    def eap(cls, target: "Score | None" = None) -> "Score":
        return cls("eap", target=Score.lv(0) if target is None else target)

    @property
    def is_observed(self) -> bool:
        return self.kind in ("summed", "eap")

    @property
    def label(self) -> str:
        if self.kind == "lv":
            return f"eta_{self.index + 1}"
        if self.kind == "eap":
            return f"eap({self.target.label})"
        return self.kind

    def check_for(self, model) -> "Score":
        d = model.latent.dimension
        if self.kind == "lv" and self.index >= d:
            raise ValidationError(f"lv index {self.index} out of range for d={d}")
        if self.kind == "eap":
            self.target.check_for(model)
        return self


LatentFunction = Callable[[np.ndarray], np.ndarray]


def latent_values(model, score: "Score | LatentFunction", eta: np.ndarray) -> np.ndarray:
    """Evaluate a latent score at the rows of ``eta`` (shape ``(n, d)``)."""
    eta = np.atleast_2d(eta)
    if callable(score) and not isinstance(score, Score):
        return np.broadcast_to(np.asarray(score(eta), dtype=float), (eta.shape[0],)).copy()
    score.check_for(model)
    if score.kind == "lv":
        return np.array(eta[:, score.index], dtype=float)
    if score.kind == "true_summed":
        return np.asarray(model.expected_summed(eta), dtype=float)
    raise ValidationError(f"{score.label} is not a latent score")
