"""Step 1 of the Monte Carlo procedure: latent draws, responses and scores.

Random numbers come from numpy's ``Philox`` counter-based generator.  Rows
are generated in fixed blocks of ``BLOCK_SIZE``; block ``b`` of stream ``s``
is seeded with ``SeedSequence(seed, spawn_key=(s, b))``.  Latent draws use
stream 0 and responses stream 1, so a sample is a pure function of
``(model, n, seed)`` regardless of how many threads generate it.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ValidationError
from .models import (
    MISSING,
    LatentDistribution,
    LinearFactorModel,
    Score,
    is_discrete,
    latent_values,
    unique_patterns,
)
from .quadrature import QuadratureGrid, build_grid, linear_eap, posterior_table, true_score_curve

BLOCK_SIZE = 2**16
LATENT_STREAM = 0
RESPONSE_STREAM = 1


def block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream, block))))


def _blocks(n: int) -> list[slice]:
    return [slice(a, min(n, a + BLOCK_SIZE)) for a in range(0, n, BLOCK_SIZE)]


def _map_blocks(fn, n: int) -> list:
    blocks = _blocks(n)
    workers = min(kernels.n_threads(), len(blocks))
    if workers <= 1:
        return [fn(b, s) for b, s in enumerate(blocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda bs: fn(*bs), enumerate(blocks)))


def _check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValidationError(f"seed must be a non-negative integer, got {seed!r}")
    return int(seed)


def sample_latents(latent: LatentDistribution, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. draws from the latent normal distribution, shape ``(n, d)``."""
    if n < 1:
        raise ValidationError(f"sample size must be at least 1, got {n}")
    seed = _check_seed(seed)
    chol = latent.cholesky()
    d = latent.dimension

    def draw(b, rows):
        z = block_rng(seed, LATENT_STREAM, b).standard_normal((rows.stop - rows.start, d))
        return latent.mean + z @ chol.T

    return np.concatenate(_map_blocks(draw, n), axis=0)


def simulate_responses(model, latents: np.ndarray, seed: int) -> np.ndarray:
    """One manifest vector per latent row.

    Continuous models return floats; discrete models return int8 codes with
    ``-1`` for structurally missing entries.
    """
    seed = _check_seed(seed)
    latents = np.asarray(latents, dtype=float)
    if latents.ndim != 2 or latents.shape[1] != model.latent.dimension:
        raise ValidationError(
            f"latents must have shape (n, {model.latent.dimension}), got {latents.shape}"
        )

    def draw(b, rows):
        return model.simulate(latents[rows], block_rng(seed, RESPONSE_STREAM, b))

    return np.concatenate(_map_blocks(draw, latents.shape[0]), axis=0)


@dataclass(eq=False)
class McSample:
    """A simulated sample of latent and manifest vectors."""

    model: object
    latents: np.ndarray
    responses: np.ndarray
    seed: int
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.latents.shape[0]

    def groups(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct response patterns and the row-to-pattern index (discrete models)."""
        if "groups" not in self._cache:
            self._cache["groups"] = unique_patterns(self.responses)
        return self._cache["groups"]

    def observed(self, score: Score, grid: QuadratureGrid | None = None) -> np.ndarray:
        key = ("observed", score, _grid_key(grid))
        if key not in self._cache:
            groups = self.groups() if is_discrete(self.model) else None
            self._cache[key] = compute_observed_scores(
                self.model, self.responses, score, grid, groups=groups
            )
        return self._cache[key]

    def latent(self, score: Score, grid: QuadratureGrid | None = None) -> np.ndarray:
        key = ("latent", score)
        if key not in self._cache:
            self._cache[key] = compute_latent_scores(self.model, self.latents, score, grid)
        return self._cache[key]


def _grid_key(grid: QuadratureGrid | None):
    if grid is None:
        return None
    return (grid.size, grid.nodes.tobytes(), grid.weights.tobytes())


def simulate(model, n: int, seed: int) -> McSample:
    latents = sample_latents(model.latent, n, seed)
    responses = simulate_responses(model, latents, seed)
    return McSample(model, latents, responses, _check_seed(seed))


def compute_observed_scores(model, responses, score: Score, grid: QuadratureGrid | None = None,
                            groups=None) -> np.ndarray:
    """Observed score of every row of ``responses``.

    For discrete models, EAP scores are computed once per distinct pattern
    and broadcast back; ``groups`` may pass a precomputed
    ``unique_patterns`` result.  Linear models use the closed-form EAP.
    """
    if not score.is_observed:
        raise ValidationError(f"{score.label} is not an observed score")
    score.check_for(model)
    responses = np.asarray(responses)
    if score.kind == "summed":
        if isinstance(model, LinearFactorModel):
            return responses.sum(axis=1).astype(float)
        return model.summed_scores(responses)
    if isinstance(model, LinearFactorModel):
        return linear_eap(model, responses, score.target)
    grid = build_grid(model.latent) if grid is None else grid
    uniq, inverse = unique_patterns(responses) if groups is None else groups
    _, eaps = posterior_table(model, uniq, grid, [score.target])
    return eaps[inverse, 0]


def compute_latent_scores(model, latents, score: Score, grid: QuadratureGrid | None = None) -> np.ndarray:
    """Latent score of every row of ``latents``."""
    if score.is_observed:
        raise ValidationError(f"{score.label} is not a latent score")
    score.check_for(model)
    latents = np.asarray(latents, dtype=float)
    if score.kind == "true_summed":
        return true_score_curve(model, Score.summed(), latents, grid)
    return latent_values(model, score, latents)


def compute_true_scores(model, latents, score: Score, grid: QuadratureGrid | None = None) -> np.ndarray:
    """True score ``E(x | eta)`` of an observed score at every latent row."""
    return true_score_curve(model, score, np.asarray(latents, dtype=float), grid)


def write_sample_csv(sample: McSample, path, scores: dict | None = None) -> None:
    """Columns ``eta_1..eta_d, y_1..y_m`` then one column per named score.

    Structurally missing responses are written as empty fields.
    """
    scores = scores or {}
    d = sample.latents.shape[1]
    m = sample.responses.shape[1]
    header = [f"eta_{i + 1}" for i in range(d)] + [f"y_{j + 1}" for j in range(m)] + list(scores)
    discrete = is_discrete(sample.model)
    extra = [np.asarray(v) for v in scores.values()]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(sample.n):
            row = [repr(float(v)) for v in sample.latents[i]]
            if discrete:
                row += ["" if c == MISSING else str(int(c)) for c in sample.responses[i]]
            else:
                row += [repr(float(v)) for v in sample.responses[i]]
            row += [repr(float(col[i])) for col in extra]
            writer.writerow(row)
