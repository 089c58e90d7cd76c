"""The two built-in model pairs, datasets and row-wise simulation.

Stream layout for one simulated record (a reference-table row, a
pseudo-observed dataset, ...), by position within its substream:

    0        model index draw (uniform compared with the model prior)
    1        parameter draw from the model's prior
    2..n+1   the n observations

``simulate_rows`` fills this layout for many substreams at once; the scalar
``draw_model`` / ``sample_prior`` / ``simulate_dataset`` consume the same
positions one call at a time, so both paths agree bit for bit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .rng import Addresses, RngStream
from .sampling import (
    InvalidParameterError,
    exponential_sample,
    geometric_sample,
    normal_sample,
    poisson_sample,
    uniform_sample,
)

MODEL_SLOT = 0
THETA_SLOT = 1
DATA_OFFSET = 2


class PairKind(enum.Enum):
    POISSON_GEOMETRIC = "pois-geo"
    NORMAL_NORMAL = "normal"


@dataclass(frozen=True)
class ModelPairSpec:
    """Two competing models with their priors.

    Poisson/geometric: model 1 is Poisson(lambda) with lambda ~ Exp(1); model 2
    is Geometric(p) on {0, 1, ...} with p ~ U(0, 1). Normal/normal: model i is
    N(mu, sigma_i^2) with the shared prior mu ~ N(0, a^2).
    """

    kind: PairKind
    sigma1: float | None = None
    sigma2: float | None = None
    prior_scale_a: float | None = None

    def __post_init__(self) -> None:
        if self.kind is PairKind.NORMAL_NORMAL:
            for name in ("sigma1", "sigma2", "prior_scale_a"):
                value = getattr(self, name)
                if value is None or not np.isfinite(value) or value <= 0:
                    raise InvalidParameterError(f"{name} must be a finite positive number, got {value}")
        elif any(v is not None for v in (self.sigma1, self.sigma2, self.prior_scale_a)):
            raise InvalidParameterError("the Poisson/geometric pair has no free hyperparameters")

    @classmethod
    def poisson_geometric(cls) -> "ModelPairSpec":
        return cls(PairKind.POISSON_GEOMETRIC)

    @classmethod
    def normal(cls, sigma1: float, sigma2: float, a: float = 1.0) -> "ModelPairSpec":
        return cls(PairKind.NORMAL_NORMAL, float(sigma1), float(sigma2), float(a))

    @property
    def is_count(self) -> bool:
        return self.kind is PairKind.POISSON_GEOMETRIC

    def sigma(self, model_index: int) -> float:
        check_model_index(model_index)
        return self.sigma1 if model_index == 1 else self.sigma2

    def label(self) -> str:
        if self.is_count:
            return "pois-geo"
        return f"normal(sigma1={self.sigma1!r},sigma2={self.sigma2!r},a={self.prior_scale_a!r})"

    @classmethod
    def from_label(cls, label: str) -> "ModelPairSpec":
        if label == "pois-geo":
            return cls.poisson_geometric()
        if label.startswith("normal(") and label.endswith(")"):
            fields = dict(item.split("=") for item in label[len("normal(") : -1].split(","))
            return cls.normal(float(fields["sigma1"]), float(fields["sigma2"]), float(fields["a"]))
        raise ValueError(f"unrecognised model pair label {label!r}")


@dataclass(frozen=True)
class ModelPrior:
    p1: float = 0.5
    p2: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 <= self.p1 <= 1.0 and 0.0 <= self.p2 <= 1.0) or abs(self.p1 + self.p2 - 1.0) > 1e-12:
            raise ValueError(f"model prior must be two probabilities summing to 1, got ({self.p1}, {self.p2})")

    @property
    def log_odds(self) -> float:
        """log(p1/p2); infinite for a degenerate prior."""
        with np.errstate(divide="ignore"):
            return float(np.log(self.p1) - np.log(self.p2))


UNIFORM_PRIOR = ModelPrior(0.5, 0.5)


@dataclass(frozen=True, eq=False)
class Dataset:
    """An i.i.d. sample. Count data are stored as integer-valued floats."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if values.size < 1:
            raise ValueError("a dataset needs at least one observation")
        if not np.all(np.isfinite(values)):
            raise ValueError("dataset values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def is_count(self) -> bool:
        v = self.values
        return bool(np.all(v >= 0) and np.all(v == np.floor(v)))

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Dataset) and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())


def check_model_index(model_index: int) -> None:
    if model_index not in (1, 2):
        raise ValueError(f"model index must be 1 or 2, got {model_index!r}")


def check_compatible(pair: ModelPairSpec, data: Dataset) -> None:
    if pair.is_count and not data.is_count:
        raise ValueError("the Poisson/geometric pair needs non-negative integer data")


# -- vectorised kernels -------------------------------------------------------


def _model_from_uniform(u: np.ndarray, prior: ModelPrior) -> np.ndarray:
    return np.where(u < prior.p1, 1, 2).astype(np.int8)


def _prior_kernel(pair: ModelPairSpec, models: np.ndarray, addr: Addresses) -> np.ndarray:
    if pair.is_count:
        lam = exponential_sample(addr, 1.0)
        p = uniform_sample(addr, 0.0, 1.0)
        return np.where(models == 1, lam, p)
    return normal_sample(addr, 0.0, pair.prior_scale_a)


def _likelihood_kernel(pair: ModelPairSpec, models: np.ndarray, theta: np.ndarray, addr: Addresses) -> np.ndarray:
    """Observations for a (rows, n) address grid; ``models``/``theta`` are per row."""
    rows, n = addr.shape
    out = np.empty((rows, n), dtype=np.float64)
    for m in (1, 2):
        sel = models == m
        if not sel.any():
            continue
        sub = Addresses(addr.master_seed, addr.streams[sel], addr.positions[sel])
        th = theta[sel][:, None]
        if pair.is_count:
            out[sel] = poisson_sample(sub, th) if m == 1 else geometric_sample(sub, th)
        else:
            out[sel] = normal_sample(sub, th, pair.sigma(m))
    return out


def simulate_rows(
    pair: ModelPairSpec,
    master_seed: int,
    streams: np.ndarray,
    n: int,
    model_prior: ModelPrior = UNIFORM_PRIOR,
    models: np.ndarray | int | None = None,
    theta: np.ndarray | float | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Simulate one (model, theta, dataset) record per substream.

    Passing ``models`` fixes the model per row instead of drawing it; position
    0 is then left unused so parameter and data draws are unchanged. Passing
    ``theta`` likewise fixes the parameter and leaves position 1 unused.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    streams = np.asarray(streams, dtype=np.uint64)
    rows = streams.size
    if models is None:
        u, _ = Addresses(master_seed, streams, np.full(rows, MODEL_SLOT, dtype=np.uint64)).uniforms()
        models = _model_from_uniform(u, model_prior)
    else:
        models = np.broadcast_to(np.asarray(models, dtype=np.int8), (rows,)).copy()
    if theta is None:
        theta = _prior_kernel(pair, models, Addresses(master_seed, streams, np.full(rows, THETA_SLOT, dtype=np.uint64)))
    else:
        theta = np.broadcast_to(np.asarray(theta, dtype=np.float64), (rows,)).copy()
        for m in (1, 2):
            for value in np.unique(theta[models == m]):
                check_theta(pair, m, float(value))
    grid = Addresses(
        master_seed,
        np.repeat(streams[:, None], n, axis=1),
        np.broadcast_to(np.arange(DATA_OFFSET, DATA_OFFSET + n, dtype=np.uint64), (rows, n)).copy(),
    )
    data = _likelihood_kernel(pair, models, theta, grid)
    return models, theta, data


# -- one-record-at-a-time API -------------------------------------------------


def draw_model(prior: ModelPrior, rng: RngStream) -> int:
    u, _ = rng.reserve(1).uniforms()
    return int(_model_from_uniform(u, prior)[0])


def sample_prior(pair: ModelPairSpec, model_index: int, rng: RngStream) -> float:
    """One parameter draw: lambda, p or mu depending on the pair and model."""
    check_model_index(model_index)
    return float(_prior_kernel(pair, np.array([model_index]), rng.reserve(1))[0])


def check_theta(pair: ModelPairSpec, model_index: int, theta: float) -> None:
    check_model_index(model_index)
    if not np.isfinite(theta):
        raise InvalidParameterError("parameter must be finite")
    if pair.is_count and model_index == 1 and theta < 0:
        raise InvalidParameterError("Poisson rate must be >= 0")
    if pair.is_count and model_index == 2 and not 0 < theta <= 1:
        raise InvalidParameterError("geometric probability must lie in (0, 1]")


def simulate_dataset(pair: ModelPairSpec, model_index: int, theta: float, n: int, rng: RngStream) -> Dataset:
    check_theta(pair, model_index, theta)
    if n < 1:
        raise ValueError("n must be >= 1")
    addr = rng.reserve(n)
    grid = Addresses(addr.master_seed, addr.streams[None, :], addr.positions[None, :])
    values = _likelihood_kernel(pair, np.array([model_index]), np.array([float(theta)]), grid)[0]
    return Dataset(values)


def simulate_record(
    pair: ModelPairSpec, n: int, rng: RngStream, model_prior: ModelPrior = UNIFORM_PRIOR
) -> tuple[int, float, Dataset]:
    """The sequential equivalent of one ``simulate_rows`` row."""
    m = draw_model(model_prior, rng)
    theta = sample_prior(pair, m, rng)
    return m, theta, simulate_dataset(pair, m, theta, n, rng)
