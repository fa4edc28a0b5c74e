"""Pure numpy implementations of the hot kernels.

Same signatures and semantics as the compiled ``_ckernels`` module; selected
automatically when the extension is not built.
"""

import numpy as np

_NEG_BIG = -1e300
_CHUNK_CELLS = 8_000_000  # rows * nodes per temporary block


def _flat_table(log_table):
    m, k, q = log_table.shape
    flat = np.where(np.isneginf(log_table), _NEG_BIG, log_table).reshape(m * k, q)
    return flat, m, k


def _one_hot(patterns, m, k):
    n = patterns.shape[0]
    hot = np.zeros((n, m * k))
    rows, cols = np.nonzero(patterns >= 0)
    hot[rows, cols * k + patterns[rows, cols]] = 1.0
    return hot


def loglik_rows(patterns, log_table):
    """Log-likelihood of each pattern at each point: ``(n_patterns, n_points)``.

    ``log_table[j, c, q]`` is ``log P(y_j = c | point q)``; pattern entries
    equal to -1 are skipped (factor 1).
    """
    patterns = np.asarray(patterns)
    flat, m, k = _flat_table(np.asarray(log_table, dtype=float))
    out = np.empty((patterns.shape[0], flat.shape[1]))
    step = max(1, _CHUNK_CELLS // max(flat.shape[1], 1))
    for start in range(0, patterns.shape[0], step):
        block = patterns[start : start + step]
        out[start : start + step] = _one_hot(block, m, k) @ flat
    return out


def posterior_moments(patterns, log_table, log_weights, values):
    """Marginal log-probability and posterior means of ``values`` per pattern.

    Returns ``(log_marginal, means)`` with shapes ``(n,)`` and ``(n, k)``
    where ``means[i] = sum_q w_q L_i(q) values[q] / sum_q w_q L_i(q)``.
    """
    patterns = np.asarray(patterns)
    values = np.asarray(values, dtype=float)
    log_weights = np.asarray(log_weights, dtype=float)
    flat, m, k = _flat_table(np.asarray(log_table, dtype=float))
    n = patterns.shape[0]
    log_marginal = np.empty(n)
    means = np.empty((n, values.shape[1]))
    step = max(1, _CHUNK_CELLS // max(flat.shape[1], 1))
    for start in range(0, n, step):
        stop = min(n, start + step)
        ll = _one_hot(patterns[start:stop], m, k) @ flat
        ll += log_weights
        mx = ll.max(axis=1, keepdims=True)
        np.subtract(ll, mx, out=ll)
        np.exp(ll, out=ll)
        total = ll.sum(axis=1)
        log_marginal[start:stop] = mx[:, 0] + np.log(total)
        means[start:stop] = (ll @ values) / total[:, None]
    return log_marginal, means
