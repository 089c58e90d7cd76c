"""Primitive distributions drawn from counter-based addresses.

Each distribution exposes ``sample(addresses, **params)`` operating
elementwise on broadcast parameter arrays, so one code path serves scalar draws
and million-row tables alike.

Geometric(p) lives on {0, 1, 2, ...} with pmf p(1-p)^y. The sum of n such
variables is then negative binomial with n successes, which is what the count
model pair relies on. Do not switch to the shifted {1, 2, ...} convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ndtri

from .rng import Addresses, RngStream

# Poisson switches from sequential inversion to PTRS rejection here.
POISSON_INVERSION_LIMIT = 10.0
_MAX_REJECTION_ATTEMPTS = 10_000


class InvalidParameterError(ValueError):
    """A distribution or model parameter lies outside its domain."""


def _check(cond, message: str) -> None:
    if not np.all(cond):
        raise InvalidParameterError(message)


def poisson_sample(addr: Addresses, lam) -> np.ndarray:
    lam = np.broadcast_to(np.asarray(lam, dtype=np.float64), addr.shape)
    _check(np.isfinite(lam) & (lam >= 0), "Poisson rate must be finite and >= 0")
    out = np.zeros(addr.shape, dtype=np.float64)
    small = lam < POISSON_INVERSION_LIMIT
    if small.any():
        out[small] = _poisson_inversion(addr.subset(small), lam[small])
    if (~small).any():
        out[~small] = _poisson_ptrs(addr.subset(~small), lam[~small])
    return out


def _poisson_inversion(addr: Addresses, lam: np.ndarray) -> np.ndarray:
    u, _ = addr.uniforms()
    k = np.zeros_like(lam)
    p = np.exp(-lam)
    cdf = p.copy()
    pending = u > cdf
    # The cap only bites when the cdf saturates a few ulps below u.
    for _ in range(200):
        if not pending.any():
            break
        k[pending] += 1.0
        p[pending] *= lam[pending] / k[pending]
        cdf[pending] += p[pending]
        pending &= (u > cdf) & (p > 0.0)
    return k


def _poisson_ptrs(addr: Addresses, lam: np.ndarray) -> np.ndarray:
    """Hormann's transformed rejection with squeeze (PTRS)."""
    slam = np.sqrt(lam)
    loglam = np.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)

    out = np.full(lam.shape, np.nan)
    pending = np.ones(lam.shape, dtype=bool)
    for attempt in range(_MAX_REJECTION_ATTEMPTS):
        idx = np.flatnonzero(pending)
        if idx.size == 0:
            return out
        ua, v = addr.subset(pending).uniforms(attempt)
        u = ua - 0.5
        us = 0.5 - np.abs(u)
        k = np.floor((2.0 * a[idx] / us + b[idx]) * u + lam[idx] + 0.43)
        quick = (us >= 0.07) & (v <= vr[idx])
        reject = (k < 0) | ((us < 0.013) & (v > us))
        with np.errstate(divide="ignore", invalid="ignore"):
            lhs = np.log(v) + np.log(invalpha[idx]) - np.log(a[idx] / (us * us) + b[idx])
            rhs = -lam[idx] + k * loglam[idx] - gammaln(k + 1.0)
        ok = quick | (~reject & (lhs <= rhs))
        out[idx[ok]] = k[ok]
        pending[idx[ok]] = False
    raise RuntimeError("Poisson rejection sampler exceeded its attempt budget")


def geometric_sample(addr: Addresses, p) -> np.ndarray:
    p = np.broadcast_to(np.asarray(p, dtype=np.float64), addr.shape)
    _check((p > 0) & (p <= 1), "geometric success probability must lie in (0, 1]")
    u, _ = addr.uniforms()
    with np.errstate(divide="ignore"):
        y = np.floor(np.log(u) / np.log1p(-p))
    return np.where(p == 1.0, 0.0, y)


def normal_sample(addr: Addresses, mu, sigma) -> np.ndarray:
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    _check(np.isfinite(mu), "normal mean must be finite")
    _check(np.isfinite(sigma) & (sigma > 0), "normal scale must be finite and > 0")
    u, _ = addr.uniforms()
    return mu + sigma * ndtri(u)


def exponential_sample(addr: Addresses, rate) -> np.ndarray:
    rate = np.asarray(rate, dtype=np.float64)
    _check(np.isfinite(rate) & (rate > 0), "exponential rate must be finite and > 0")
    u, _ = addr.uniforms()
    return -np.log(u) / rate


def uniform_sample(addr: Addresses, low, high) -> np.ndarray:
    low = np.asarray(low, dtype=np.float64)
    high = np.asarray(high, dtype=np.float64)
    _check(np.isfinite(low) & np.isfinite(high) & (low < high), "uniform bounds need low < high")
    u, _ = addr.uniforms()
    return low + (high - low) * u


@dataclass(frozen=True)
class Poisson:
    lam: float

    def sample(self, addr: Addresses) -> np.ndarray:
        return poisson_sample(addr, self.lam)

    @property
    def mean(self) -> float:
        return self.lam

    @property
    def variance(self) -> float:
        return self.lam


@dataclass(frozen=True)
class Geometric:
    p: float

    def sample(self, addr: Addresses) -> np.ndarray:
        return geometric_sample(addr, self.p)

    @property
    def mean(self) -> float:
        return (1.0 - self.p) / self.p

    @property
    def variance(self) -> float:
        return (1.0 - self.p) / self.p**2


@dataclass(frozen=True)
class Normal:
    mu: float
    sigma: float

    def sample(self, addr: Addresses) -> np.ndarray:
        return normal_sample(addr, self.mu, self.sigma)

    @property
    def mean(self) -> float:
        return self.mu

    @property
    def variance(self) -> float:
        return self.sigma**2


@dataclass(frozen=True)
class Exponential:
    rate: float

    def sample(self, addr: Addresses) -> np.ndarray:
        return exponential_sample(addr, self.rate)

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    @property
    def variance(self) -> float:
        return 1.0 / self.rate**2


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def sample(self, addr: Addresses) -> np.ndarray:
        return uniform_sample(addr, self.low, self.high)

    @property
    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    @property
    def variance(self) -> float:
        return (self.high - self.low) ** 2 / 12.0


Primitive = Poisson | Geometric | Normal | Exponential | Uniform


def sample_primitive(dist: Primitive, rng: RngStream) -> float:
    """One draw from ``dist``, consuming one position of ``rng``."""
    return float(dist.sample(rng.reserve(1))[0])


def sample_many(dist: Primitive, rng: RngStream, size: int) -> np.ndarray:
    """``size`` i.i.d. draws from ``dist``, one position each."""
    return dist.sample(rng.reserve(size))


def mean_band(dist: Primitive, size: int, sigmas: float = 4.0) -> float:
    """Half-width of the ``sigmas``-sigma band for the sample mean."""
    return sigmas * math.sqrt(dist.variance / size)
