"""Kernel backend selection and threaded dispatch.

The compiled extension ``_ckernels`` is used when it imports; otherwise the
numpy implementation in ``_pykernels`` takes over.  Set
``LVPRECISION_KERNELS=python`` to force the fallback.  ``PRECISION_THREADS``
caps the number of worker threads (default: CPU count); rows are split into
contiguous blocks and reassembled in order, so results do not depend on the
thread count.
"""

from __future__ import annotations

import importlib
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _pykernels


def _load_backend():
    if os.environ.get("LVPRECISION_KERNELS", "").lower() == "python":
        return _pykernels, "python"
    try:
        return importlib.import_module("lvprecision._ckernels"), "cython"
    except ImportError:
        return _pykernels, "python"


_backend, BACKEND = _load_backend()


def available_backends() -> dict:
    out = {"python": _pykernels}
    try:
        out["cython"] = importlib.import_module("lvprecision._ckernels")
    except ImportError:
        pass
    return out


def n_threads() -> int:
    raw = os.environ.get("PRECISION_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


_MIN_ROWS_PER_THREAD = 512


def _split(n: int) -> list[slice]:
    workers = min(n_threads(), max(1, n // _MIN_ROWS_PER_THREAD))
    edges = np.linspace(0, n, workers + 1).astype(int)
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:])]


def _run(fn, patterns, *args):
    parts = _split(patterns.shape[0])
    if len(parts) == 1:
        return [fn(patterns, *args)]
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        return list(pool.map(lambda s: fn(patterns[s], *args), parts))


def loglik_rows(patterns, log_table, backend=None):
    mod = _backend if backend is None else available_backends()[backend]
    patterns = np.asarray(patterns)
    return np.concatenate(_run(mod.loglik_rows, patterns, log_table), axis=0)


def posterior_moments(patterns, log_table, log_weights, values, backend=None):
    mod = _backend if backend is None else available_backends()[backend]
    patterns = np.asarray(patterns)
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    results = _run(mod.posterior_moments, patterns, log_table, log_weights, values)
    log_marginal = np.concatenate([r[0] for r in results])
    means = np.concatenate([r[1] for r in results], axis=0)
    return log_marginal, means
