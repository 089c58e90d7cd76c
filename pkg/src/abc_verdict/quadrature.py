"""Adaptive-quadrature reference values for the marginal likelihoods.

These integrate prior x likelihood, written out term by term from the
textbook densities, and share no algebra with the closed forms in
:mod:`abc_verdict.oracles`; they exist to check those closed forms. They are
slow and meant for small inputs.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln, xlog1py, xlogy

from .models import Dataset, ModelPairSpec, check_model_index

_QUAD = dict(epsabs=0.0, epsrel=1e-12, limit=500)
_LOG_2PI = math.log(2.0 * math.pi)


def _poisson_logpmf(k, mu):
    return float(np.sum(xlogy(k, mu) - mu - gammaln(np.asarray(k) + 1.0)))


def _geometric_logpmf(k, p):
    # support {0, 1, ...}, pmf p (1-p)^k
    k = np.asarray(k, dtype=np.float64)
    return float(k.size * math.log(p) + np.sum(xlog1py(k, -p)))


def _negbin_logpmf(s, n, p):
    # failures before the n-th success
    return float(gammaln(s + n) - gammaln(n) - gammaln(s + 1.0) + n * math.log(p) + xlog1py(s, -p))


def _normal_logpdf(x, mu, sigma):
    z = (np.asarray(x, dtype=np.float64) - mu) / sigma
    return float(np.sum(-0.5 * _LOG_2PI - math.log(sigma) - 0.5 * z * z))


def _log_integral_positive(log_f) -> float:
    """log of the integral of exp(log_f(x)) over x in (0, inf).

    Substitutes x = t / (1 - t) and splits the t-range at the mode.
    """

    def g(t):
        x = t / (1.0 - t)
        return log_f(x) - 2.0 * math.log1p(-t)

    return _log_integral_unit(g)


def _log_integral_unit(log_g) -> float:
    """log of the integral of exp(log_g(t)) over t in (0, 1)."""
    eps = 1e-15
    res = optimize.minimize_scalar(lambda t: -log_g(t), bounds=(eps, 1 - eps), method="bounded",
                                   options={"xatol": 1e-13})
    grid = np.linspace(eps, 1 - eps, 2001)
    vals = np.array([log_g(t) for t in grid])
    best = int(np.argmax(vals))
    mode = res.x if -res.fun >= vals[best] else grid[best]
    peak = max(-res.fun, vals[best])

    def f(t):
        return math.exp(log_g(t) - peak)

    total = 0.0
    for lo, hi in ((0.0, mode), (mode, 1.0)):
        if hi > lo:
            val, _ = integrate.quad(f, lo, hi, **_QUAD)
            total += val
    return peak + math.log(total)


def _log_integral_real(log_f) -> float:
    """log of the integral of exp(log_f(x)) over the real line."""
    res = optimize.minimize_scalar(lambda x: -log_f(x))
    mode = res.x
    peak = log_f(mode)
    h = 1e-4 * max(1.0, abs(mode))
    curv = -(log_f(mode + h) - 2 * peak + log_f(mode - h)) / h**2
    width = 1.0 / math.sqrt(curv) if curv > 0 else 1.0

    def f(z):
        # x = mode + width * tan(z), z in (-pi/2, pi/2)
        x = mode + width * math.tan(z)
        jac = width / math.cos(z) ** 2
        return math.exp(log_f(x) - peak) * jac

    total = 0.0
    for lo, hi in ((-math.pi / 2, 0.0), (0.0, math.pi / 2)):
        val, _ = integrate.quad(f, lo, hi, **_QUAD)
        total += val
    return peak + math.log(total)


def log_marginal_full_quad(pair: ModelPairSpec, model_index: int, data: Dataset) -> float:
    check_model_index(model_index)
    y = data.values
    if pair.is_count:
        if model_index == 1:
            return _log_integral_positive(
                lambda lam: -lam + _poisson_logpmf(y, lam) if lam > 0 else -np.inf
            )
        return _log_integral_unit(lambda p: _geometric_logpmf(y, p))
    sigma = pair.sigma(model_index)
    a = pair.prior_scale_a
    return _log_integral_real(lambda mu: _normal_logpdf(mu, 0.0, a) + _normal_logpdf(y, mu, sigma))


def log_marginal_eta_quad(pair: ModelPairSpec, model_index: int, eta: float, n: int) -> float:
    """Quadrature for the statistic's prior predictive: Sum (count) or Mean (normal)."""
    check_model_index(model_index)
    if pair.is_count:
        s = float(eta)
        if model_index == 1:
            return _log_integral_positive(
                lambda lam: -lam + _poisson_logpmf(s, n * lam) if lam > 0 else -np.inf
            )
        return _log_integral_unit(lambda p: _negbin_logpmf(s, n, p))
    sigma = pair.sigma(model_index)
    a = pair.prior_scale_a
    return _log_integral_real(
        lambda mu: _normal_logpdf(mu, 0.0, a) + _normal_logpdf(float(eta), mu, sigma / math.sqrt(n))
    )
