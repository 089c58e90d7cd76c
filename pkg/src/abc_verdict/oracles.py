"""Closed-form, log-domain marginal likelihoods and Bayes factors.

For data y of size n with S = sum(y) and L = sum(log y_i!):

count pair
    full marginal, model 1    S! / ((n+1)^(S+1) prod y_i!)
    full marginal, model 2    n! S! / (n+S+1)!
    S-marginal,   model 1     n^S / (n+1)^(S+1)
    S-marginal,   model 2     C(n+S-1, S) n! S! / (n+S+1)!  =  n / ((n+S)(n+S+1))
    g1/g2                     C(n+S-1, S) S! n^-S / prod y_i!

normal pair (mu ~ N(0, a^2), ybar, SS = sum (y_i - ybar)^2)
    full marginal, model i    (2 pi)^(-n/2) sigma_i^-(n-1) (sigma_i^2 + n a^2)^(-1/2)
                              * exp(-SS / (2 sigma_i^2) - n ybar^2 / (2 (sigma_i^2 + n a^2)))
    ybar-marginal, model i    N(ybar; 0, a^2 + sigma_i^2 / n)
    g1/g2                     (sigma2/sigma1)^(n-1) exp((sigma2^-2 - sigma1^-2) SS / 2)

Everything is returned as a natural log; nothing is formed on the
probability scale.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import betaln, expit, gammaln

from .models import Dataset, ModelPairSpec, ModelPrior, check_compatible, check_model_index
from .summaries import SummaryStatistic, log_factorial_sum, summarize

_LOG_2PI = math.log(2.0 * math.pi)


def _count_stats(data: Dataset) -> tuple[float, float, int]:
    sorted_row = np.sort(data.values)[None, :]
    return float(sorted_row.sum()), float(log_factorial_sum(sorted_row)[0]), data.n


def _normal_stats(data: Dataset) -> tuple[float, float, int]:
    ybar, ss = summarize(SummaryStatistic.MEAN_AND_SUM_SQ, data)
    return float(ybar), float(ss), data.n


def log_marginal_full(pair: ModelPairSpec, model_index: int, data: Dataset) -> float:
    check_model_index(model_index)
    check_compatible(pair, data)
    if pair.is_count:
        s, logfact, n = _count_stats(data)
        if model_index == 1:
            return float(gammaln(s + 1.0) - (s + 1.0) * math.log(n + 1.0) - logfact)
        return float(betaln(n + 1.0, s + 1.0))
    ybar, ss, n = _normal_stats(data)
    sigma = pair.sigma(model_index)
    var = sigma * sigma
    spread = var + n * pair.prior_scale_a**2
    return (
        -0.5 * n * _LOG_2PI
        - (n - 1) * math.log(sigma)
        - 0.5 * math.log(spread)
        - ss / (2.0 * var)
        - n * ybar * ybar / (2.0 * spread)
    )


def log_bayes_factor_full(pair: ModelPairSpec, data: Dataset) -> float:
    return log_marginal_full(pair, 1, data) - log_marginal_full(pair, 2, data)


def log_marginal_eta(pair: ModelPairSpec, model_index: int, eta, n: int) -> float:
    """Prior predictive of the Sum (count pair) or Mean (normal pair) statistic."""
    check_model_index(model_index)
    if n < 1:
        raise ValueError("n must be >= 1")
    eta = np.atleast_1d(np.asarray(eta, dtype=np.float64))
    if eta.size != 1:
        raise ValueError("statistic oracles only cover the one-dimensional Sum / Mean statistics")
    value = float(eta[0])
    if pair.is_count:
        if value < 0 or value != math.floor(value):
            raise ValueError("the Sum statistic of count data is a non-negative integer")
        if model_index == 1:
            return -value * math.log1p(1.0 / n) - math.log(n + 1.0)
        return math.log(n) - math.log(n + value) - math.log(n + value + 1.0)
    sigma = pair.sigma(model_index)
    var = pair.prior_scale_a**2 + sigma * sigma / n
    return -0.5 * (_LOG_2PI + math.log(var)) - value * value / (2.0 * var)


def _eta_statistic(pair: ModelPairSpec) -> SummaryStatistic:
    return SummaryStatistic.SUM if pair.is_count else SummaryStatistic.MEAN


def log_bayes_factor_eta(pair: ModelPairSpec, data: Dataset) -> float:
    check_compatible(pair, data)
    eta = summarize(_eta_statistic(pair), data)
    return log_marginal_eta(pair, 1, eta, data.n) - log_marginal_eta(pair, 2, eta, data.n)


def log_discrepancy_ratio(pair: ModelPairSpec, data: Dataset) -> float:
    """log g1(y)/g2(y), the factor separating the full and statistic Bayes factors."""
    check_compatible(pair, data)
    if pair.is_count:
        s, logfact, n = _count_stats(data)
        # C(n+S-1, S) S! = (n+S-1)! / (n-1)!
        return float(gammaln(n + s) - gammaln(n) - s * math.log(n) - logfact)
    _, ss, n = _normal_stats(data)
    s1, s2 = pair.sigma1, pair.sigma2
    return (n - 1) * math.log(s2 / s1) + 0.5 * (s2**-2 - s1**-2) * ss


def lemma1_limit(theta0: float) -> float:
    """log(theta0^-1 (theta0+1)^2 e^-theta0).

    Kept for comparison with :func:`count_eta_limit`: the two agree only at
    theta0 = 1, and the S-marginals above converge to the latter.
    """
    if not theta0 > 0 or not math.isfinite(theta0):
        raise ValueError(f"theta0 must be a finite positive number, got {theta0}")
    return -math.log(theta0) + 2.0 * math.log1p(theta0) - theta0


def count_eta_limit(theta0: float) -> float:
    """log of the almost-sure limit of B^eta on the count pair when S/n -> theta0.

    From the S-marginals above: log m1 = -theta0 - log n + o(1) and
    log m2 = -log n - 2 log(1 + theta0) + o(1), so B^eta -> (1+theta0)^2 e^-theta0.
    """
    if not theta0 > 0 or not math.isfinite(theta0):
        raise ValueError(f"theta0 must be a finite positive number, got {theta0}")
    return 2.0 * math.log1p(theta0) - theta0


def posterior_prob_from_log_bf(log_bf: float, prior: ModelPrior = ModelPrior()) -> float:
    """P(M=1 | y) = p1 B / (p1 B + p2), evaluated as a logistic of the log odds."""
    if math.isnan(log_bf):
        raise ValueError("log Bayes factor is NaN")
    if prior.p1 == 0.0 or prior.p2 == 0.0:
        return prior.p1
    return float(expit(log_bf + prior.log_odds))


def exact_logs(pair: ModelPairSpec, data: Dataset) -> tuple[float, float, float]:
    """(log B12, log B^eta, log g-ratio) for one dataset."""
    return log_bayes_factor_full(pair, data), log_bayes_factor_eta(pair, data), log_discrepancy_ratio(pair, data)


def factorization_residual(log_b12: float, log_beta: float, log_g: float) -> float:
    return log_b12 - (log_g + log_beta)
