from __future__ import annotations

import numpy as np
import pytest

from abc_verdict.models import (
    Dataset,
    ModelPairSpec,
    ModelPrior,
    draw_model,
    sample_prior,
    simulate_dataset,
    simulate_record,
    simulate_rows,
)
from abc_verdict.rng import derive_stream
from abc_verdict.sampling import InvalidParameterError

COUNT = ModelPairSpec.poisson_geometric()
NORMAL = ModelPairSpec.normal(0.1, 10.0, 1.0)


def _prior_draws(pair, m, size, seed=3):
    streams = np.arange(size, dtype=np.uint64)
    _, theta, _ = simulate_rows(pair, seed, streams, 1, models=m)
    return theta


def test_geometric_prior_in_open_unit_interval():
    p = _prior_draws(COUNT, 2, 100_000)
    assert np.all((p > 0) & (p < 1))


def test_exponential_prior_mean():
    lam = _prior_draws(COUNT, 1, 100_000)
    assert abs(lam.mean() - 1) < 4 / np.sqrt(1e5)


def test_normal_prior_variance():
    mu = _prior_draws(ModelPairSpec.normal(1, 1, 1.0), 1, 100_000)
    assert abs(mu.var(ddof=1) - 1) < 0.06


def test_sample_prior_scalar_matches_rows():
    theta = _prior_draws(COUNT, 2, 5, seed=9)
    for i in range(5):
        rng = derive_stream(9, i)
        rng.reserve(1)  # model slot
        assert sample_prior(COUNT, 2, rng) == theta[i]


@pytest.mark.parametrize(
    "m,theta,n,expected",
    [(1, 0.0, 5, [0, 0, 0, 0, 0]), (2, 1.0, 3, [0, 0, 0])],
)
def test_degenerate_datasets(m, theta, n, expected):
    y = simulate_dataset(COUNT, m, theta, n, derive_stream(1, 0))
    assert y.values.tolist() == expected


def test_normal_dataset_mean():
    pair = ModelPairSpec.normal(2.0, 1.0)
    y = simulate_dataset(pair, 1, 1.0, 100_000, derive_stream(4, 4))
    assert abs(y.values.mean() - 1) < 4 * 2 / np.sqrt(1e5)


@pytest.mark.parametrize("pair", [COUNT, NORMAL], ids=["count", "normal"])
def test_sequential_record_matches_batch_row(pair):
    streams = np.arange(20, dtype=np.uint64)
    models, theta, data = simulate_rows(pair, 77, streams, 12)
    for i in range(20):
        m, th, y = simulate_record(pair, 12, derive_stream(77, i))
        assert m == models[i] and th == theta[i]
        assert np.array_equal(y.values, data[i])


def test_large_poisson_rates_agree_between_paths():
    streams = np.arange(8, dtype=np.uint64)
    _, _, data = simulate_rows(COUNT, 5, streams, 30, models=1, theta=50.0)
    for i in range(8):
        rng = derive_stream(5, i)
        rng.reserve(2)
        assert np.array_equal(simulate_dataset(COUNT, 1, 50.0, 30, rng).values, data[i])


def test_model_draw_follows_prior():
    streams = np.arange(100_000, dtype=np.uint64)
    models, _, _ = simulate_rows(COUNT, 1, streams, 1, model_prior=ModelPrior(0.3, 0.7))
    assert abs(np.mean(models == 1) - 0.3) < 4 * np.sqrt(0.21 / 1e5)
    assert draw_model(ModelPrior(1.0, 0.0), derive_stream(0, 0)) == 1


def test_invalid_inputs():
    with pytest.raises(InvalidParameterError):
        ModelPairSpec.normal(0.0, 1.0)
    with pytest.raises(InvalidParameterError):
        simulate_dataset(COUNT, 2, 0.0, 3, derive_stream(0, 0))
    with pytest.raises(ValueError):
        simulate_dataset(COUNT, 3, 0.5, 3, derive_stream(0, 0))
    with pytest.raises(ValueError):
        Dataset([])
    with pytest.raises(ValueError):
        ModelPrior(0.6, 0.6)


def test_dataset_is_immutable_and_hashable():
    y = Dataset([3, 1, 2])
    assert y.n == 3 and y.is_count
    with pytest.raises(ValueError):
        y.values[0] = 5
    assert y == Dataset([3.0, 1.0, 2.0]) and hash(y) == hash(Dataset([3, 1, 2]))
    assert not Dataset([0.5]).is_count


def test_pair_label_round_trip():
    for pair in (COUNT, NORMAL, ModelPairSpec.normal(1 / 3, 2.5, 0.7)):
        assert ModelPairSpec.from_label(pair.label()) == pair
