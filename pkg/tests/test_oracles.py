from __future__ import annotations

import math

import numpy as np
import pytest
from _support import COUNT, NORMAL, random_datasets

from abc_verdict.models import Dataset, ModelPairSpec, ModelPrior
from abc_verdict.oracles import (
    count_eta_limit,
    exact_logs,
    lemma1_limit,
    log_bayes_factor_eta,
    log_bayes_factor_full,
    log_discrepancy_ratio,
    log_marginal_eta,
    log_marginal_full,
    posterior_prob_from_log_bf,
)
from abc_verdict.quadrature import log_marginal_eta_quad, log_marginal_full_quad

REL = 1e-12
UNIT = ModelPairSpec.normal(1.0, 1.0, 1.0)


def close(a, b, rel=REL):
    return math.isclose(a, b, rel_tol=rel, abs_tol=1e-15)


@pytest.mark.parametrize(
    "pair,m,y,expected",
    [
        (COUNT, 1, [0, 0], math.log(1 / 3)),
        (COUNT, 2, [1, 1], math.log(1 / 30)),
        (COUNT, 1, [1, 1], math.log(2 / 27)),
        (UNIT, 1, [0.0], -0.5 * math.log(4 * math.pi)),
    ],
)
def test_full_marginal_examples(pair, m, y, expected):
    got = log_marginal_full(pair, m, Dataset(y))
    assert close(got, expected)
    assert close(log_marginal_full_quad(pair, m, Dataset(y)), expected, 1e-9)


def test_bayes_factor_examples():
    assert log_bayes_factor_full(COUNT, Dataset([0, 0])) == pytest.approx(0, abs=1e-15)
    assert close(log_bayes_factor_full(COUNT, Dataset([1, 1])), math.log(20 / 9))
    assert close(log_bayes_factor_eta(COUNT, Dataset([1, 1])), math.log(40 / 27))
    assert log_bayes_factor_eta(COUNT, Dataset([0, 0])) == pytest.approx(0, abs=1e-15)
    assert close(log_discrepancy_ratio(COUNT, Dataset([1, 1])), math.log(1.5))
    assert log_discrepancy_ratio(COUNT, Dataset([0, 0])) == 0


def test_statistic_marginal_examples():
    assert close(log_marginal_eta(COUNT, 1, 2, 2), math.log(4 / 27))
    assert close(log_marginal_eta(COUNT, 2, 2, 2), math.log(1 / 10))
    pair = ModelPairSpec.normal(2.0, 2.0, 1.0)
    assert close(log_marginal_eta(pair, 1, 0.0, 4), -0.5 * math.log(2 * math.pi * 2))


def test_statistic_marginals_sum_to_one():
    # the count S-marginal of model 1 is a proper pmf on {0, 1, ...}
    n = 3
    total = sum(math.exp(log_marginal_eta(COUNT, 1, s, n)) for s in range(400))
    assert total == pytest.approx(1, abs=1e-12)
    # model 2 telescopes: sum_{s<K} n/((n+s)(n+s+1)) = 1 - n/(n+K)
    K = 1000
    total = sum(math.exp(log_marginal_eta(COUNT, 2, s, n)) for s in range(K))
    assert total == pytest.approx(1 - n / (n + K), rel=1e-12)


@pytest.mark.parametrize("sigma", [0.3, 1.0, 7.0])
def test_equal_variances_give_unit_factors(sigma):
    pair = ModelPairSpec.normal(sigma, sigma, 2.0)
    for y in random_datasets(pair, 10, seed=4):
        assert exact_logs(pair, y) == (0.0, 0.0, 0.0)


def test_constant_normal_data_discrepancy():
    pair = ModelPairSpec.normal(0.5, 3.0)
    y = Dataset([1.7] * 9)
    assert close(log_discrepancy_ratio(pair, y), 8 * math.log(6.0))


def test_posterior_probability_examples():
    assert posterior_prob_from_log_bf(0.0) == 0.5
    assert posterior_prob_from_log_bf(math.log(3)) == pytest.approx(0.75, rel=1e-15)
    p = posterior_prob_from_log_bf(math.log(20 / 9), ModelPrior(0.2, 0.8))
    assert p == pytest.approx((0.2 * 20 / 9) / (0.2 * 20 / 9 + 0.8), rel=1e-14)
    assert posterior_prob_from_log_bf(1e6) == 1.0 and posterior_prob_from_log_bf(-1e6) == 0.0


def test_lemma_limits():
    assert lemma1_limit(1.0) == pytest.approx(math.log(4 / math.e), rel=1e-14)
    assert lemma1_limit(0.5) == pytest.approx(math.log(2 * 2.25 * math.exp(-0.5)), rel=1e-14)
    assert lemma1_limit(1.0) == count_eta_limit(1.0)
    grid = np.linspace(3, 200, 400)
    vals = [lemma1_limit(t) for t in grid]
    assert np.all(np.diff(vals) < 0) and vals[-1] < -150
    for bad in (0.0, -1.0, math.inf):
        with pytest.raises(ValueError):
            lemma1_limit(bad)


@pytest.mark.parametrize("theta0", [0.5, 2.0, 5.0])
def test_statistic_bayes_factor_tends_to_derived_limit(theta0):
    # evaluate the closed form on S = theta0 * n exactly, far out
    n = 10**9
    s = theta0 * n
    log_b = log_marginal_eta(COUNT, 1, s, n) - log_marginal_eta(COUNT, 2, s, n)
    assert log_b == pytest.approx(count_eta_limit(theta0), abs=1e-6)


def test_factorization_identity_on_random_datasets():
    for pair in (COUNT, NORMAL, ModelPairSpec.normal(2.0, 0.5, 3.0)):
        for y in random_datasets(pair, 1000, seed=17):
            b12, beta, g = exact_logs(pair, y)
            assert abs(b12 - (g + beta)) < 1e-9


def test_closed_forms_match_quadrature():
    gen = np.random.default_rng(123)
    normal_pairs = [ModelPairSpec.normal(0.5, 2.0, 1.0), ModelPairSpec.normal(1.5, 0.7, 2.0)]
    for i in range(100):
        n = int(gen.integers(1, 11))
        if i % 2 == 0:
            y = np.zeros(n)
            S = int(gen.integers(0, 31))
            np.add.at(y, gen.integers(0, n, S), 1)
            pair, y = COUNT, Dataset(y)
            eta = float(S)
        else:
            pair = normal_pairs[i % 4 // 2]
            y = Dataset(gen.normal(0, 1.5, n))
            eta = float(y.values.mean())
        for m in (1, 2):
            assert close(log_marginal_full(pair, m, y), log_marginal_full_quad(pair, m, y), 1e-6)
            assert close(log_marginal_eta(pair, m, eta, n), log_marginal_eta_quad(pair, m, eta, n), 1e-6)


def test_count_marginal_depends_on_sufficient_statistics_only():
    # distinct multisets sharing (n, S, prod y!)
    for a, b in [((0, 3, 5), (1, 1, 6)), ((0, 1, 4, 5), (0, 2, 2, 6)), ((1, 4, 5), (2, 2, 6))]:
        for m in (1, 2):
            assert math.isclose(log_marginal_full(COUNT, m, Dataset(a)), log_marginal_full(COUNT, m, Dataset(b)),
                                rel_tol=1e-12)
    # same S but a different product: only the geometric marginal agrees
    u, v = Dataset([3, 3, 0]), Dataset([1, 2, 3])
    assert log_marginal_full(COUNT, 2, u) == log_marginal_full(COUNT, 2, v)
    assert not math.isclose(log_marginal_full(COUNT, 1, u), log_marginal_full(COUNT, 1, v))


def test_normal_marginal_depends_on_mean_and_spread_only():
    gen = np.random.default_rng(5)
    pair = ModelPairSpec.normal(0.8, 2.5, 1.3)
    for _ in range(20):
        n = int(gen.integers(3, 30))
        x = gen.normal(0.4, 2.0, n)
        # rotate the centred data within the sum-zero subspace: mean and spread are preserved
        q, _ = np.linalg.qr(gen.normal(size=(n, n)))
        centred = x - x.mean()
        basis = np.linalg.qr(np.column_stack([np.ones(n), centred]))[0]
        rot = basis[:, 1] * np.linalg.norm(centred)
        z = x.mean() + (rot if rot @ centred > 0 else -rot)
        other = x.mean() + q[:, 0] - q[:, 0].mean()
        other = x.mean() + (other - x.mean()) * np.linalg.norm(centred) / np.linalg.norm(other - x.mean())
        for m in (1, 2):
            ref = log_marginal_full(pair, m, Dataset(x))
            assert math.isclose(log_marginal_full(pair, m, Dataset(other)), ref, rel_tol=1e-12)
            assert math.isclose(log_marginal_full(pair, m, Dataset(z)), ref, rel_tol=1e-12)


def test_quadrature_densities_match_scipy():
    from scipy import stats

    from abc_verdict import quadrature as q

    k = np.array([0.0, 1.0, 4.0, 9.0])
    assert q._poisson_logpmf(k, 2.3) == pytest.approx(stats.poisson.logpmf(k, 2.3).sum(), rel=1e-13)
    assert q._geometric_logpmf(k, 0.3) == pytest.approx(stats.geom.logpmf(k + 1, 0.3).sum(), rel=1e-13)
    assert q._negbin_logpmf(7.0, 4, 0.35) == pytest.approx(stats.nbinom.logpmf(7, 4, 0.35), rel=1e-13)
    assert q._normal_logpdf(k, 1.0, 2.5) == pytest.approx(stats.norm.logpdf(k, 1.0, 2.5).sum(), rel=1e-13)
