from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from abc_verdict.rng import derive_stream
from abc_verdict.sampling import (
    Exponential,
    Geometric,
    InvalidParameterError,
    Normal,
    Poisson,
    Uniform,
    mean_band,
    sample_many,
    sample_primitive,
)

N = 100_000

DISTS = [
    Poisson(3.0),
    Poisson(0.4),
    Poisson(25.0),
    Poisson(1e4),
    Geometric(0.1),
    Geometric(0.5),
    Geometric(0.9),
    Normal(1.0, 2.0),
    Exponential(1.0),
    Exponential(3.5),
    Uniform(-1.0, 4.0),
]


@pytest.mark.parametrize("dist", DISTS, ids=repr)
def test_moments_within_four_sigma(dist):
    x = sample_many(dist, derive_stream(2024, 1), N)
    assert abs(x.mean() - dist.mean) < mean_band(dist, N)
    sq = (x - x.mean()) ** 2
    assert abs(sq.mean() - dist.variance) < 4 * sq.std() / np.sqrt(N) + 1e-12


def test_poisson_mean_three():
    x = sample_many(Poisson(3.0), derive_stream(7, 0), N)
    assert abs(x.mean() - 3) < 4 * np.sqrt(3 / N)


def test_poisson_zero_is_degenerate():
    rng = derive_stream(1, 1)
    assert all(sample_primitive(Poisson(0.0), rng) == 0.0 for _ in range(100))


def test_geometric_one_is_degenerate():
    assert np.all(sample_many(Geometric(1.0), derive_stream(1, 2), 1000) == 0.0)


@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_geometric_support_and_mass_at_zero(p):
    x = sample_many(Geometric(p), derive_stream(99, 3), N)
    assert np.all(x >= 0) and np.all(x == np.floor(x))
    assert abs(np.mean(x == 0) - p) < 4 * np.sqrt(p * (1 - p) / N)


@pytest.mark.parametrize("lam", [2.5, 9.99, 10.0, 40.0])
def test_poisson_pmf_matches_on_both_sides_of_the_switch(lam):
    x = sample_many(Poisson(lam), derive_stream(5, int(lam * 100)), N)
    assert np.all(x == np.floor(x)) and np.all(x >= 0)
    ks = np.arange(int(lam) - 3, int(lam) + 4)
    ks = ks[ks >= 0]
    for k in ks:
        p = stats.poisson.pmf(k, lam)
        assert abs(np.mean(x == k) - p) < 4 * np.sqrt(p * (1 - p) / N)


@pytest.mark.parametrize(
    "factory",
    [
        lambda: Poisson(-1.0),
        lambda: Poisson(float("nan")),
        lambda: Geometric(0.0),
        lambda: Geometric(1.5),
        lambda: Normal(0.0, 0.0),
        lambda: Exponential(0.0),
        lambda: Uniform(1.0, 1.0),
    ],
)
def test_invalid_parameters_rejected(factory):
    with pytest.raises(InvalidParameterError):
        sample_primitive(factory(), derive_stream(0, 0))


def test_sample_many_equals_repeated_scalar():
    for dist in DISTS:
        batch = sample_many(dist, derive_stream(8, 8), 64)
        rng = derive_stream(8, 8)
        assert batch.tolist() == [sample_primitive(dist, rng) for _ in range(64)]
