import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lvprecision import kernels

BACKENDS = list(kernels.available_backends())


def _problem(seed, n, m, k, q):
    rng = np.random.default_rng(seed)
    logits = rng.normal(size=(m, k, q))
    table = logits - np.logaddexp.reduce(logits, axis=1, keepdims=True)
    patterns = rng.integers(-1, k, size=(n, m))
    log_w = np.log(rng.dirichlet(np.ones(q)))
    values = rng.normal(size=(q, 2))
    return patterns, table, log_w, values


def _brute(patterns, table, log_w, values):
    n, m = patterns.shape
    ll = np.zeros((n, table.shape[2]))
    for i in range(n):
        for j in range(m):
            if patterns[i, j] >= 0:
                ll[i] += table[j, patterns[i, j]]
    joint = np.exp(ll + log_w)
    marg = joint.sum(axis=1)
    return ll, np.log(marg), joint @ values / marg[:, None]


class TestBackends:
    def test_compiled_backend_available(self):
        assert "cython" in BACKENDS

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_against_brute_force(self, backend):
        pats, table, log_w, values = _problem(1, 50, 5, 3, 17)
        ll, lm, mu = _brute(pats, table, log_w, values)
        np.testing.assert_allclose(kernels.loglik_rows(pats, table, backend=backend), ll, atol=1e-12)
        got_lm, got_mu = kernels.posterior_moments(pats, table, log_w, values, backend=backend)
        np.testing.assert_allclose(got_lm, lm, atol=1e-12)
        np.testing.assert_allclose(got_mu, mu, atol=1e-12)

    @given(st.integers(0, 10_000), st.integers(1, 40), st.integers(0, 6), st.integers(2, 4), st.integers(2, 30))
    def test_backends_agree(self, seed, n, m, k, q):
        pats, table, log_w, values = _problem(seed, n, m, k, q)
        results = [kernels.posterior_moments(pats, table, log_w, values, backend=b) for b in BACKENDS]
        for lm, mu in results[1:]:
            np.testing.assert_allclose(lm, results[0][0], atol=1e-10)
            np.testing.assert_allclose(mu, results[0][1], atol=1e-10)

    @given(arrays(np.int64, (7, 3), elements=st.integers(-1, 1)))
    def test_loglik_agree(self, pats):
        _, table, _, _ = _problem(3, 1, 3, 2, 11)
        outs = [kernels.loglik_rows(pats, table, backend=b) for b in BACKENDS]
        for out in outs[1:]:
            np.testing.assert_allclose(out, outs[0], atol=1e-12)

    def test_thread_count_does_not_change_results(self, monkeypatch):
        pats, table, log_w, values = _problem(7, 5000, 6, 3, 41)
        monkeypatch.setenv("PRECISION_THREADS", "1")
        one = kernels.posterior_moments(pats, table, log_w, values)
        monkeypatch.setenv("PRECISION_THREADS", "4")
        four = kernels.posterior_moments(pats, table, log_w, values)
        np.testing.assert_array_equal(one[0], four[0])
        np.testing.assert_array_equal(one[1], four[1])

    def test_n_threads_env(self, monkeypatch):
        monkeypatch.setenv("PRECISION_THREADS", "3")
        assert kernels.n_threads() == 3
        monkeypatch.setenv("PRECISION_THREADS", "bogus")
        assert kernels.n_threads() >= 1
