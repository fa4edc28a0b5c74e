"""Acceptance criteria 1 to 9.

Each test records one PASS/FAIL line, printed in the terminal summary.
"""

import time
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from lvprecision.analytic import analytic_coefficients
from lvprecision.irt import analytic_coefficients as irt_coefficients
from lvprecision.irt import pattern_moments, prmse_lv_2pl, reliability_eap_2pl
from lvprecision.linear import coefficient_alpha, prmse_lv_factor, reliability_eap_factor, reliability_summed_factor
from lvprecision.mc import McConfig, estimate_prmse, estimate_reliability
from lvprecision.models import LatentDistribution, LinearFactorModel, Score, TwoPLModel
from lvprecision.quadrature import build_grid, eap_score, marginal_probability
from lvprecision.simulation import compute_true_scores, simulate

PATTERN_TABLE = {
    (0, 0, 0): (0.19, -0.96),
    (1, 0, 0): (0.26, -0.41),
    (0, 1, 0): (0.08, -0.16),
    (0, 0, 1): (0.01, 0.08),
    (1, 1, 0): (0.24, 0.31),
    (1, 0, 1): (0.04, 0.54),
    (0, 1, 1): (0.02, 0.76),
    (1, 1, 1): (0.15, 1.22),
}
# (one-factor EAP, one-factor sum, 2PL EAP, 2PL sum)
RELIABILITY_TARGETS = (0.5821, 0.5090, 0.5146, 0.4951)
# (one-factor eta, one-factor true sum, 2PL eta, 2PL true sum)
PRMSE_TARGETS = (0.5821, 0.5821, 0.4960, 0.5150)

COEFFICIENTS = (
    ("reliability_eap", Score.eap()),
    ("reliability_summed", Score.summed()),
    ("prmse_lv", Score.lv(0)),
    ("prmse_true_summed", Score.true_summed()),
)


def record(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def one_factor(loadings, uniq):
    m = len(loadings)
    return LinearFactorModel(np.zeros(m), loadings, uniq, LatentDistribution.standard())


def test_criterion_1_pattern_table(twopl_model):
    start = time.perf_counter()
    grid = build_grid(twopl_model.latent)
    worst = 0.0
    for pattern, (prob, eap) in PATTERN_TABLE.items():
        worst = max(worst, abs(marginal_probability(twopl_model, pattern, grid) - prob))
        worst = max(worst, abs(eap_score(twopl_model, pattern, Score.lv(0), grid) - eap))
    elapsed = time.perf_counter() - start
    ok = worst <= 0.005 and elapsed < 1.0
    record(1, ok, f"max |diff| {worst:.4f} (tol .005), {elapsed:.3f}s")
    assert ok


def test_criterion_2_reliability(factor_model, twopl_model):
    start = time.perf_counter()
    fa, tp = analytic_coefficients(factor_model), analytic_coefficients(twopl_model)
    values = (fa["reliability_eap"], fa["reliability_summed"], tp["reliability_eap"], tp["reliability_summed"])
    elapsed = time.perf_counter() - start
    worst = max(abs(v - t) for v, t in zip(values, RELIABILITY_TARGETS))
    ok = worst <= 0.0005 and elapsed < 1.0
    record(2, ok, f"values {tuple(round(v, 4) for v in values)}, max |diff| {worst:.5f}, {elapsed:.3f}s")
    assert ok


def test_criterion_3_prmse(factor_model, twopl_model):
    start = time.perf_counter()
    fa, tp = analytic_coefficients(factor_model), analytic_coefficients(twopl_model)
    values = (fa["prmse_lv"], fa["prmse_true_summed"], tp["prmse_lv"], tp["prmse_true_summed"])
    mom = pattern_moments(twopl_model)
    elapsed = time.perf_counter() - start
    worst = max(abs(v - t) for v, t in zip(values, PRMSE_TARGETS))
    var_ok = abs(mom.var_true_summed - 0.46) <= 0.005 and abs(mom.var_eap_true_summed - 0.24) <= 0.005
    ok = worst <= 0.0005 and var_ok and elapsed < 1.0
    record(3, ok, f"values {tuple(round(v, 4) for v in values)}, Var(tau_s) {mom.var_true_summed:.4f}, "
                  f"Var(eap tau_s) {mom.var_eap_true_summed:.4f}, {elapsed:.3f}s")
    assert ok


@pytest.mark.slow
def test_criterion_4_mc_agreement(factor_model, twopl_model):
    start = time.perf_counter()
    seeds = (1, 2, 3, 4, 5)
    worst_analytic, worst_steps = 0.0, 0.0
    details = []
    for name, model in (("factor", factor_model), ("2pl", twopl_model)):
        target = analytic_coefficients(model)
        samples = [simulate(model, 10**6, s) for s in seeds]
        for key, score in COEFFICIENTS:
            by_method = {}
            for method in ("nonparametric", "simple_linear"):
                values = [estimate_reliability(model, score, McConfig(seed=s.seed, method=method), s).value
                          if score.is_observed else
                          estimate_prmse(model, score, McConfig(seed=s.seed, method=method), s).value
                          for s in samples]
                by_method[method] = np.array(values)
                worst_analytic = max(worst_analytic, abs(np.mean(values) - target[key]))
            worst_steps = max(worst_steps, np.abs(by_method["nonparametric"] - by_method["simple_linear"]).max())
            details.append(f"{name}.{key}={by_method['nonparametric'].mean():.4f}")
    elapsed = time.perf_counter() - start
    ok = worst_analytic <= 0.005 and worst_steps <= 0.002 and elapsed < 120
    record(4, ok, f"max |MC-analytic| {worst_analytic:.4f} (tol .005), max |step2-step2'| {worst_steps:.4f} "
                  f"(tol .002), {elapsed:.1f}s")
    print(" ".join(details))
    assert ok


def test_criterion_5_equivalence():
    rng = np.random.default_rng(5)
    worst_linear = 0.0
    for _ in range(50):
        lam = rng.uniform(0.2, 0.9, size=rng.integers(2, 9))
        model = one_factor(lam, 1 - lam**2)
        worst_linear = max(worst_linear, abs(reliability_eap_factor(model) - prmse_lv_factor(model)))
    separated = 0
    for _ in range(50):
        m = int(rng.integers(2, 7))
        model = TwoPLModel(rng.uniform(-2, 2, m), rng.uniform(0.5, 2.5, m), LatentDistribution.standard())
        separated += abs(reliability_eap_2pl(model) - prmse_lv_2pl(model)) > 1e-4
    ok = worst_linear <= 1e-12
    record(5, ok, f"linear max |Rel-PRMSE| {worst_linear:.1e} (tol 1e-12); "
                  f"2PL separated {separated}/50 (flag below 45)")
    if separated < 45:
        warnings.warn(f"only {separated}/50 random 2PL models separate reliability from PRMSE", UserWarning)
    assert ok


@pytest.mark.slow
def test_criterion_6_error_scores(factor_model, twopl_model):
    worst_mean, worst_corr = 0.0, 0.0
    for model, seed in ((factor_model, 61), (twopl_model, 62)):
        sample = simulate(model, 10**6, seed)
        grid = McConfig().grid(model)
        for score in (Score.summed(), Score.eap()):
            x = sample.observed(score, grid)
            tau = compute_true_scores(model, sample.latents, score, grid)
            err = x - tau
            worst_mean = max(worst_mean, abs(err.mean()) / x.std())
            worst_corr = max(worst_corr, abs(np.corrcoef(err, tau)[0, 1]))
    ok = worst_mean <= 0.005 and worst_corr <= 0.005
    record(6, ok, f"max |mean(e)|/sd(x) {worst_mean:.4f}, max |corr(e, tau)| {worst_corr:.4f} (tol .005)")
    assert ok


def test_criterion_7_alpha_lower_bound():
    rng = np.random.default_rng(7)
    worst = -np.inf
    for _ in range(100):
        m = int(rng.integers(2, 11))
        model = one_factor(rng.uniform(0.05, 1.5, m), rng.uniform(0.05, 1.5, m))
        worst = max(worst, coefficient_alpha(model.implied_covariance()) - reliability_summed_factor(model))
    ok = worst <= 1e-12
    record(7, ok, f"max (alpha - omega) {worst:.4f} over 100 models")
    assert ok


def _mhgrm_pipeline(model, seed):
    sample = simulate(model, 10**6, seed)
    cfg = McConfig(seed=seed)
    reports = {
        "rel(sum)": estimate_reliability(model, Score.summed(), cfg, sample),
        "rel(sum) step2'": estimate_reliability(model, Score.summed(), McConfig(seed=seed, method="simple_linear"),
                                                sample),
        "rel(eap eta_1)": estimate_reliability(model, Score.eap(Score.lv(0)), cfg, sample),
        "rel(eap eta_2)": estimate_reliability(model, Score.eap(Score.lv(1)), cfg, sample),
        "prmse(eta_1)": estimate_prmse(model, Score.lv(0), cfg, sample),
        "prmse(eta_2)": estimate_prmse(model, Score.lv(1), cfg, sample),
        "prmse(true_sum)": estimate_prmse(model, Score.true_summed(), cfg, sample),
    }
    return reports


@pytest.mark.slow
def test_criterion_8_mhgrm(hurdle_model):
    start = time.perf_counter()
    first = _mhgrm_pipeline(hurdle_model, 8)
    again = _mhgrm_pipeline(hurdle_model, 8)
    elapsed = time.perf_counter() - start
    values = {k: r.value for k, r in first.items()}
    in_unit = all(0 < v < 1 for v in values.values())
    deterministic = all(first[k] == again[k] for k in first)
    fallback = all(first[k].method == "mc-simple-linear" and first[k].diagnostic("pattern_space") == 4**14
                   for k in ("prmse(eta_1)", "prmse(eta_2)", "prmse(true_sum)"))
    steps = abs(values["rel(sum)"] - values["rel(sum) step2'"])
    ok = in_unit and deterministic and fallback and steps <= 0.01 and elapsed < 300
    summary = ", ".join(f"{k} {v:.4f}" for k, v in values.items())
    record(8, ok, f"{summary}; |step2-step2'| {steps:.4f} (tol .01); deterministic {deterministic}; "
                  f"fallback {fallback}; {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_9_brute_force_oracle():
    rng = np.random.default_rng(9)
    worst, hits = 0.0, 0
    for k in range(20):
        m = int(rng.integers(1, 5))
        model = TwoPLModel(rng.uniform(-1.5, 1.5, m), rng.uniform(0.3, 2.5, m), LatentDistribution.standard())
        report = estimate_prmse(model, Score.lv(0), McConfig(seed=100 + k, method="nonparametric"))
        diff = abs(report.value - irt_coefficients(model)["prmse_lv"])
        worst = max(worst, diff)
        hits += diff <= 0.005
    ok = hits == 20
    record(9, ok, f"{hits}/20 models within .005, max |diff| {worst:.4f}")
    assert ok
