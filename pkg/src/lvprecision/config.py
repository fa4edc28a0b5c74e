"""JSON model configuration files.

Schema (every model accepts an optional ``latent`` block; it defaults to a
standard normal of the model's dimension)::

    {"model_type": "linear_factor",
     "intercepts": [0, 0, 0],
     "loadings": [0.3, 0.5, 0.7],            # or [[...], ...] for d > 1
     "unique_covariance": [0.91, 0.75, 0.51],  # diagonal, or a full matrix
     "latent": {"dimension": 1, "mean": [0], "covariance": [[1]]}}

    {"model_type": "2pl", "intercepts": [1, 0, -2], "slopes": [1, 1.5, 2]}

    {"model_type": "graded",
     "items": [{"slopes": [1.2], "thresholds": [-1, 0.5]}, ...]}

    {"model_type": "hurdle_grm",
     "presence":  [{"slopes": [1.5, 0], "thresholds": [0.4]}, ...],
     "frequency": [{"slopes": [0, 1.2], "thresholds": [-0.3, 1.1]}, ...],
     "latent": {"dimension": 2, "mean": [0, 0],
                "covariance": [[1, 0.58], [0.58, 1]]}}
"""

from __future__ import annotations

import hashlib
import json
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .models import (
    GradedItem,
    GradedResponseModel,
    HurdleIrtreeModel,
    LatentDistribution,
    LinearFactorModel,
    TwoPLModel,
    validate_model,
)

MODEL_TYPES = ("linear_factor", "2pl", "graded", "hurdle_grm")


@contextmanager
def _field(path: str):
    """Prefix validation errors raised inside the block with a field path."""
    try:
        yield
    except ValidationError as exc:
        if getattr(exc, "field", None):
            raise
        err = type(exc)(f"{path}: {exc}")
        err.field = path
        raise err from exc


def _numeric(value, path: str, ndim: tuple[int, ...]) -> np.ndarray:
    with _field(path):
        try:
            arr = np.array(value, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValidationError("expected a number or nested list of numbers") from exc
        if arr.ndim not in ndim:
            raise ValidationError(f"expected an array with {' or '.join(map(str, ndim))} dimensions")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("values must be finite")
    return arr


def _get(obj: dict, key: str, path: str):
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: expected an object")
    if key not in obj:
        err = ValidationError(f"{path + '.' if path else ''}{key}: required field missing")
        err.field = f"{path + '.' if path else ''}{key}"
        raise err
    return obj[key]


def _latent(raw: dict, dimension: int) -> LatentDistribution:
    block = raw.get("latent")
    if block is None:
        return LatentDistribution.standard(dimension)
    if not isinstance(block, dict):
        raise ValidationError("latent: expected an object")
    dim = block.get("dimension", dimension)
    with _field("latent.dimension"):
        if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
            raise ValidationError("must be a positive integer")
    mean = _numeric(block.get("mean", [0.0] * dim), "latent.mean", (0, 1))
    cov = _numeric(block.get("covariance", np.eye(dim).tolist()), "latent.covariance", (0, 1, 2))
    with _field("latent.covariance"):
        cov = np.atleast_2d(cov)
        if cov.shape == (1, dim) and dim > 1:
            cov = np.diag(cov[0])
    with _field("latent.mean"):
        mean = np.atleast_1d(mean)
        if mean.size != dim:
            raise ValidationError(f"length {mean.size} does not match dimension {dim}")
    with _field("latent"):
        return LatentDistribution(mean, cov)


def _dimension_of(raw: dict, default: int) -> int:
    block = raw.get("latent")
    if isinstance(block, dict) and isinstance(block.get("dimension"), int):
        return block["dimension"]
    return default


def _graded_items(raw, path: str) -> tuple[GradedItem, ...]:
    if not isinstance(raw, list) or not raw:
        raise ValidationError(f"{path}: expected a non-empty list of items")
    items = []
    for j, item in enumerate(raw):
        where = f"{path}[{j}]"
        slopes = _numeric(_get(item, "slopes", where), f"{where}.slopes", (0, 1))
        thresholds = _numeric(_get(item, "thresholds", where), f"{where}.thresholds", (0, 1))
        with _field(where):
            items.append(GradedItem(slopes, thresholds))
    return tuple(items)


def model_from_dict(raw: dict):
    if not isinstance(raw, dict):
        raise ValidationError("configuration must be a JSON object")
    kind = _get(raw, "model_type", "")
    if kind not in MODEL_TYPES:
        err = ValidationError(f"model_type: must be one of {MODEL_TYPES}, got {kind!r}")
        err.field = "model_type"
        raise err
    if kind == "linear_factor":
        nu = _numeric(_get(raw, "intercepts", ""), "intercepts", (1,))
        lam = _numeric(_get(raw, "loadings", ""), "loadings", (1, 2))
        theta = _numeric(_get(raw, "unique_covariance", ""), "unique_covariance", (1, 2))
        latent = _latent(raw, 1 if lam.ndim == 1 else lam.shape[1])
        with _field("model"):
            model = LinearFactorModel(nu, lam, theta, latent)
    elif kind == "2pl":
        alpha = _numeric(_get(raw, "intercepts", ""), "intercepts", (1,))
        beta = _numeric(_get(raw, "slopes", ""), "slopes", (1, 2))
        latent = _latent(raw, 1 if beta.ndim == 1 else beta.shape[1])
        with _field("model"):
            model = TwoPLModel(alpha, beta, latent)
    elif kind == "graded":
        items = _graded_items(_get(raw, "items", ""), "items")
        latent = _latent(raw, _dimension_of(raw, items[0].slopes.size))
        with _field("model"):
            model = GradedResponseModel(items, latent)
    else:
        presence = _graded_items(_get(raw, "presence", ""), "presence")
        frequency = _graded_items(_get(raw, "frequency", ""), "frequency")
        latent = _latent(raw, 2)
        with _field("model"):
            model = HurdleIrtreeModel(presence, frequency, latent)
    return validate_model(model)


def load_model_config(path):
    """Read, parse and validate a model configuration file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return loads(text, source=str(path))


def loads(text: str, source: str = "<string>"):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        err = ParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}")
        err.line, err.column = exc.lineno, exc.colno
        raise err from exc
    return model_from_dict(raw)


def _latent_dict(latent: LatentDistribution) -> dict:
    return {
        "dimension": latent.dimension,
        "mean": latent.mean.tolist(),
        "covariance": latent.covariance.tolist(),
    }


def _items_dict(items) -> list[dict]:
    return [{"slopes": it.slopes.tolist(), "thresholds": it.thresholds.tolist()} for it in items]


def model_to_config(model) -> dict:
    if isinstance(model, LinearFactorModel):
        out = {
            "model_type": "linear_factor",
            "intercepts": model.intercepts.tolist(),
            "loadings": model.loadings.tolist(),
            "unique_covariance": model.unique_covariance.tolist(),
        }
    elif isinstance(model, TwoPLModel):
        out = {
            "model_type": "2pl",
            "intercepts": model.intercepts.tolist(),
            "slopes": model.slopes.tolist(),
        }
    elif isinstance(model, GradedResponseModel):
        out = {"model_type": "graded", "items": _items_dict(model.items)}
    elif isinstance(model, HurdleIrtreeModel):
        out = {
            "model_type": "hurdle_grm",
            "presence": _items_dict(model.presence),
            "frequency": _items_dict(model.frequency),
        }
    else:
        raise ValidationError(f"cannot serialise {type(model).__name__}")
    out["latent"] = _latent_dict(model.latent)
    return out


def dumps(model) -> str:
    return json.dumps(model_to_config(model), indent=2)


def dump_model_config(model, path) -> None:
    Path(path).write_text(dumps(model) + "\n")


def model_hash(model) -> str:
    """Short content hash of the model parameters."""
    canonical = json.dumps(model_to_config(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


FIXTURES = ("one_factor", "twopl", "mhgrm_synthetic")


def load_fixture(name: str):
    """Load one of the bundled example models by name."""
    from importlib.resources import files

    if name not in FIXTURES:
        raise ValidationError(f"unknown fixture {name!r}; choose from {FIXTURES}")
    return load_model_config(files("lvprecision") / "fixtures" / f"{name}.json")
