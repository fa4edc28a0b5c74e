"""Quadrature grids, pattern likelihoods, marginal probabilities and EAP scores.

Integrals over the latent density are replaced by weighted sums over a fixed
grid.  The default rule is the rectangular one used by common IRT software:
61 equally spaced nodes per dimension on [-6, 6] (in standard-deviation units
around the latent mean) with weights proportional to the latent density,
renormalised to sum to one.  Gauss-Hermite is available as an alternative.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import multivariate_normal

from . import kernels
from .errors import (
    GridTooCoarse,
    InadmissiblePattern,
    NonPSDCovariance,
    PatternSpaceTooLarge,
    UnsupportedAnalytic,
    ValidationError,
    ZeroMarginal,
)
from .linear import posterior_mean_weights
from .models import (
    MISSING,
    LatentDistribution,
    LinearFactorModel,
    Score,
    as_codes,
    is_discrete,
    latent_values,
)

DEFAULT_NODES = 61
DEFAULT_RANGE = (-6.0, 6.0)
PATTERN_CAP = 2**20
_LOG_TINY = math.log(1e-300)


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes ``(Q, d)`` and normalised weights ``(Q,)``.

    ``axes`` holds the per-dimension node vectors when the grid is a
    row-major tensor product of them; it enables the factorised posterior
    path for simple-structure models.
    """

    nodes: np.ndarray
    weights: np.ndarray
    axes: tuple | None = None

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (nodes.shape[0],):
            raise ValidationError("one weight per node is required")
        if np.any(weights < 0):
            raise ValidationError("quadrature weights must be non-negative")
        weights = weights / weights.sum()
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if self.axes is not None:
            axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
            if len(axes) != nodes.shape[1] or math.prod(a.size for a in axes) != nodes.shape[0]:
                raise ValidationError("grid axes do not match the node array")
            object.__setattr__(self, "axes", axes)

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def dimension(self) -> int:
        return self.nodes.shape[1]

    @property
    def log_weights(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.weights)

    def expectation(self, values) -> float:
        return float(self.weights @ np.asarray(values, dtype=float))

    def variance(self, values) -> float:
        values = np.asarray(values, dtype=float)
        centred = values - self.expectation(values)
        return float(self.weights @ centred**2)


def build_grid(
    latent: LatentDistribution,
    nodes_per_dim: int = DEFAULT_NODES,
    lo: float = DEFAULT_RANGE[0],
    hi: float = DEFAULT_RANGE[1],
    rule: str = "rectangular",
) -> QuadratureGrid:
    """Tensor-product grid for a latent distribution with ``d <= 2``."""
    if nodes_per_dim < 2:
        raise GridTooCoarse(f"need at least 2 nodes per dimension, got {nodes_per_dim}")
    if not lo < hi:
        raise GridTooCoarse(f"empty quadrature range [{lo}, {hi}]")
    d = latent.dimension
    if d > 2:
        raise UnsupportedAnalytic("quadrature is limited to d <= 2; use Monte Carlo")
    if rule == "rectangular":
        z = np.linspace(lo, hi, nodes_per_dim)
        axes = [latent.mean[i] + latent.sd[i] * z for i in range(d)]
        nodes = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=1)
        try:
            logpdf = multivariate_normal(latent.mean, latent.covariance).logpdf(nodes)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NonPSDCovariance(f"latent density is degenerate: {exc}") from exc
        logpdf = np.atleast_1d(logpdf)
        return QuadratureGrid(nodes, np.exp(logpdf - logpdf.max()), tuple(axes))
    if rule == "gauss_hermite":
        x, w = np.polynomial.hermite_e.hermegauss(nodes_per_dim)
        zs = np.stack([a.ravel() for a in np.meshgrid(*([x] * d), indexing="ij")], axis=1)
        ws = np.prod(np.stack([a.ravel() for a in np.meshgrid(*([w] * d), indexing="ij")]), axis=0)
        return QuadratureGrid(latent.mean + zs @ latent.cholesky().T, ws)
    raise ValidationError(f"unknown quadrature rule {rule!r}")


def _points(model, eta) -> tuple[np.ndarray, bool]:
    """Coerce ``eta`` to ``(n, d)``; the flag says whether a single point was given."""
    d = model.latent.dimension
    arr = np.asarray(eta, dtype=float)
    if arr.ndim == 0:
        return arr.reshape(1, 1), True
    if arr.ndim == 1:
        if d == 1:
            return arr[:, None], False
        if arr.size == d:
            return arr[None, :], True
    if arr.ndim == 2 and arr.shape[1] == d:
        return arr, False
    raise ValidationError(f"latent points of shape {arr.shape} do not match d={d}")


def _require_discrete(model) -> None:
    if not is_discrete(model):
        raise ValidationError("operation needs a model with categorical indicators")


def item_response_prob(model, item: int, category: int, eta):
    """``P(y_item = category | eta)``."""
    _require_discrete(model)
    if not 0 <= item < model.n_columns:
        raise InadmissiblePattern(f"item index {item} out of range")
    if not 0 <= category < model.n_categories[item]:
        raise InadmissiblePattern(f"category {category} outside item {item}'s range")
    pts, single = _points(model, eta)
    p = np.exp(model.log_category_probs(pts)[item, category])
    return float(p[0]) if single else p


def pattern_likelihood(model, y, eta):
    """``P(y | eta)`` under local independence; NA entries contribute 1."""
    _require_discrete(model)
    codes = model.check_patterns(as_codes(y))
    if codes.shape[0] != 1:
        raise InadmissiblePattern("pattern_likelihood takes a single pattern")
    pts, single = _points(model, eta)
    ll = kernels.loglik_rows(codes, model.log_category_probs(pts))[0]
    lik = np.exp(ll)
    return float(lik[0]) if single else lik


def enumerate_patterns(model, cap: int = PATTERN_CAP) -> np.ndarray:
    """All admissible patterns, lexicographically ordered, as an int array.

    Hurdle pairs contribute ``(0, NA), (1, 0), (1, 1), (1, 2)``; NA is -1.
    """
    _require_discrete(model)
    blocks = model.pattern_blocks()
    count = math.prod(len(b) for b in blocks)
    if count > cap:
        raise PatternSpaceTooLarge(
            f"{count} response patterns exceed the enumeration cap of {cap}"
        )
    rows = [tuple(itertools.chain.from_iterable(combo)) for combo in itertools.product(*blocks)]
    return np.array(rows, dtype=np.int64).reshape(count, model.n_columns)


def _axis_tables(model, grid: QuadratureGrid, column_axes: np.ndarray) -> list[np.ndarray]:
    """Per-axis log-probability tables; columns on other axes contribute 0."""
    tables = []
    for k, axis in enumerate(grid.axes):
        pts = np.tile(model.latent.mean, (axis.size, 1))
        pts[:, k] = axis
        table = model.log_category_probs(pts)
        table[column_axes != k] = 0.0
        tables.append(table)
    return tables


def _separable_posterior(model, patterns, grid, values, column_axes, chunk=100_000):
    """Posterior moments on a 2-D tensor grid when every column loads on one axis.

    The likelihood factorises as ``A(eta_1) B(eta_2)``, so each pattern costs
    two short log-likelihood rows and a small matrix product instead of a
    full pass over the grid.
    """
    n0, n1 = (a.size for a in grid.axes)
    w = grid.weights.reshape(n0, n1)
    weighted = [w * values[:, v].reshape(n0, n1) for v in range(values.shape[1])]
    tab_a, tab_b = _axis_tables(model, grid, column_axes)
    n = patterns.shape[0]
    log_marg = np.empty(n)
    means = np.empty((n, values.shape[1]))
    for start in range(0, n, chunk):
        block = patterns[start : start + chunk]
        a = kernels.loglik_rows(block, tab_a)
        b = kernels.loglik_rows(block, tab_b)
        amax = a.max(axis=1, keepdims=True)
        bmax = b.max(axis=1, keepdims=True)
        big_a, big_b = np.exp(a - amax), np.exp(b - bmax)
        total = np.einsum("ni,ni->n", big_a, big_b @ w.T)
        rows = slice(start, start + block.shape[0])
        with np.errstate(divide="ignore"):
            log_marg[rows] = amax[:, 0] + bmax[:, 0] + np.log(total)
        for v, wv in enumerate(weighted):
            means[rows, v] = np.einsum("ni,ni->n", big_a, big_b @ wv.T) / np.where(total > 0, total, 1.0)
        # rows whose factorised sum underflows go through the general kernel
        weak = np.flatnonzero(total < 1e-250)
        if weak.size:
            table = model.log_category_probs(grid.nodes)
            lm, mu = kernels.posterior_moments(block[weak], table, grid.log_weights, values)
            log_marg[start + weak] = lm
            means[start + weak] = mu
    return log_marg, means


def posterior_table(model, patterns, grid: QuadratureGrid, targets, check=True):
    """Marginal probabilities and EAP scores for a stack of patterns.

    ``targets`` is a list of latent scores (``Score`` or callables of the
    node array).  Returns ``(probs, eaps)`` with shapes ``(n,)`` and
    ``(n, len(targets))``.  Raises ``ZeroMarginal`` when any pattern
    probability drops below 1e-300.
    """
    _require_discrete(model)
    if check:
        patterns = model.check_patterns(patterns)
    if grid.dimension != model.latent.dimension:
        raise ValidationError("grid dimension does not match the model")
    values = np.column_stack([latent_values(model, t, grid.nodes) for t in targets])
    column_axes = model.column_axes() if grid.axes is not None and grid.dimension == 2 else None
    if column_axes is not None:
        log_marg, means = _separable_posterior(model, patterns, grid, values, column_axes)
    else:
        table = model.log_category_probs(grid.nodes)
        log_marg, means = kernels.posterior_moments(patterns, table, grid.log_weights, values)
    if np.any(log_marg < _LOG_TINY):
        raise ZeroMarginal("a response pattern has marginal probability below 1e-300")
    return np.exp(log_marg), means


def marginal_probability(model, y, grid: QuadratureGrid) -> float:
    """``P(y) = sum_q w_q P(y | node_q)``."""
    codes = model.check_patterns(as_codes(y))
    _require_discrete(model)
    table = model.log_category_probs(grid.nodes)
    log_marg, _ = kernels.posterior_moments(
        codes, table, grid.log_weights, np.ones((grid.size, 1))
    )
    return float(np.exp(log_marg[0]))


def eap_score(model, y, target=None, grid: QuadratureGrid | None = None) -> float:
    """Posterior mean of a latent score given one response pattern.

    For the linear factor model the closed-form posterior mean is used and
    ``grid`` is ignored.
    """
    target = Score.lv(0) if target is None else target
    if isinstance(model, LinearFactorModel):
        return float(linear_eap(model, np.atleast_2d(np.asarray(y, dtype=float)), target)[0])
    grid = build_grid(model.latent) if grid is None else grid
    codes = model.check_patterns(as_codes(y))
    _, means = posterior_table(model, codes, grid, [target], check=False)
    return float(means[0, 0])


def linear_eap(model: LinearFactorModel, y: np.ndarray, target) -> np.ndarray:
    """Closed-form EAP of an ``lv`` or ``true_summed`` score, row-wise over ``y``."""
    if not isinstance(target, Score):
        raise ValidationError("linear-model EAP supports Score targets only")
    target.check_for(model)
    gain, offset = posterior_mean_weights(model)
    eta_tilde = np.asarray(y, dtype=float) @ gain.T + offset
    if target.kind == "lv":
        return eta_tilde[:, target.index]
    if target.kind == "true_summed":
        return model.expected_summed(eta_tilde)
    raise ValidationError(f"{target.label} is not a latent score")


def linear_true_eap(model: LinearFactorModel, eta: np.ndarray, target) -> np.ndarray:
    """``E(eap | eta)`` for the linear model (the EAP is linear in ``y``)."""
    gain, offset = posterior_mean_weights(model)
    expected_eta_tilde = model.expected_response(eta) @ gain.T + offset
    if target.kind == "lv":
        return expected_eta_tilde[:, target.index]
    return model.expected_summed(expected_eta_tilde)


def _tcc_of_eap(model, score: Score, pts, grid, cap, chunk=200_000):
    patterns = enumerate_patterns(model, cap)
    _, eaps = posterior_table(model, patterns, grid, [score.target], check=False)
    eaps = eaps[:, 0]
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], chunk):
        block = pts[start : start + chunk]
        lik = np.exp(kernels.loglik_rows(patterns, model.log_category_probs(block)))
        out[start : start + chunk] = eaps @ lik
    return out


def true_score_curve(model, score: Score, eta, grid: QuadratureGrid | None = None,
                     cap: int = PATTERN_CAP):
    """True score ``E(x | eta)`` of an observed score at the given latent points.

    Summed scores use the test characteristic curve directly; EAP scores on
    discrete models sum ``eap(y) P(y | eta)`` over all admissible patterns.
    """
    if not score.is_observed:
        raise ValidationError(f"{score.label} is not an observed score")
    score.check_for(model)
    pts, single = _points(model, eta)
    if score.kind == "summed":
        out = np.asarray(model.expected_summed(pts), dtype=float)
    elif isinstance(model, LinearFactorModel):
        out = linear_true_eap(model, pts, score.target)
    else:
        grid = build_grid(model.latent) if grid is None else grid
        out = _tcc_of_eap(model, score, pts, grid, cap)
    return float(out[0]) if single else out


def pattern_table(model, grid: QuadratureGrid | None = None, targets=None,
                  cap: int = PATTERN_CAP) -> dict:
    """Every admissible pattern with its probability, EAP scores and summed score."""
    grid = build_grid(model.latent) if grid is None else grid
    if targets is None:
        targets = [Score.lv(i) for i in range(model.latent.dimension)]
    patterns = enumerate_patterns(model, cap)
    probs, eaps = posterior_table(model, patterns, grid, targets, check=False)
    return {
        "patterns": patterns,
        "probability": probs,
        "eap": eaps,
        "targets": list(targets),
        "summed": model.summed_scores(patterns),
    }


def format_pattern(codes) -> str:
    return " ".join("NA" if int(c) == MISSING else str(int(c)) for c in codes)
