"""Rejection ABC for a single model and for two-model choice.

A reference table is simulated from the joint prior over (model, parameter,
data). Row ``i`` is generated entirely from substream ``i`` of the table's
master seed, so the table does not depend on how its rows are chunked across
workers.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import expit, logit

from .logistic import fit_weighted_logistic
from .models import (
    UNIFORM_PRIOR,
    Dataset,
    ModelPairSpec,
    ModelPrior,
    check_compatible,
    check_model_index,
    simulate_rows,
)
from .summaries import SummaryStatistic, check_statistic, summarize, summarize_rows

DEFAULT_CHUNK_ROWS = 1 << 16


class Metric(enum.Enum):
    EUCLIDEAN = "euclidean"
    NORMALIZED_EUCLIDEAN = "normalized-euclidean"


@dataclass(frozen=True)
class FixedTolerance:
    eps: float

    def __post_init__(self) -> None:
        if math.isnan(self.eps) or self.eps < 0:
            raise ValueError("tolerance must be >= 0")

    def __str__(self) -> str:
        return f"eps:{self.eps!r}"


@dataclass(frozen=True)
class KNearest:
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def __str__(self) -> str:
        return f"knn:{self.k}"


AcceptanceRule = FixedTolerance | KNearest


def parse_rule(text: str) -> AcceptanceRule:
    """Parse ``knn:<k>`` or ``eps:<x>`` (``eps:inf`` accepts everything)."""
    kind, _, value = text.partition(":")
    if kind == "knn":
        return KNearest(int(value))
    if kind == "eps":
        return FixedTolerance(float(value))
    raise ValueError(f"acceptance rule must look like knn:<k> or eps:<x>, got {text!r}")


@dataclass(frozen=True)
class AbcConfig:
    statistic: SummaryStatistic
    metric: Metric = Metric.NORMALIZED_EUCLIDEAN
    rule: AcceptanceRule = KNearest(500)
    model_prior: ModelPrior = UNIFORM_PRIOR
    table_size: int = 100_000
    data_size: int = 50
    master_seed: int = 0

    def __post_init__(self) -> None:
        if self.table_size < 1:
            raise ValueError("table_size must be >= 1")
        if self.data_size < 1:
            raise ValueError("data_size must be >= 1")
        if isinstance(self.rule, KNearest) and self.rule.k > self.table_size:
            raise ValueError(f"k={self.rule.k} exceeds the table size {self.table_size}")


@dataclass(eq=False)
class ReferenceTable:
    pair: ModelPairSpec
    statistic: SummaryStatistic
    n: int
    master_seed: int
    model_prior: ModelPrior
    models: np.ndarray  # (T,) int8, values 1 or 2
    thetas: np.ndarray  # (T, k)
    summaries: np.ndarray  # (T, d)

    @property
    def size(self) -> int:
        return int(self.models.size)

    def __len__(self) -> int:
        return self.size

    def to_csv(self, path: str | Path | None = None) -> str:
        text = table_to_csv(self)
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    def equals(self, other: "ReferenceTable") -> bool:
        return (
            self.pair == other.pair
            and self.statistic is other.statistic
            and self.n == other.n
            and self.master_seed == other.master_seed
            and self.model_prior == other.model_prior
            and np.array_equal(self.models, other.models)
            and np.array_equal(self.thetas, other.thetas)
            and np.array_equal(self.summaries, other.summaries)
        )


def _table_chunk(pair, statistic, n, seed, prior, models, start, stop):
    streams = np.arange(start, stop, dtype=np.uint64)
    m, theta, data = simulate_rows(pair, seed, streams, n, prior, models=models)
    return m, theta, summarize_rows(statistic, data)


def generate_reference_table(
    pair: ModelPairSpec,
    config: AbcConfig,
    workers: int = 1,
    chunk_rows: int | None = None,
    fixed_model: int | None = None,
) -> ReferenceTable:
    """Simulate ``config.table_size`` rows from the joint prior.

    ``fixed_model`` pins every row to one model (single-model ABC); the
    parameter and data draws of each row are unchanged by it.
    """
    check_statistic(config.statistic, pair)
    if fixed_model is not None:
        check_model_index(fixed_model)
    T = config.table_size
    if chunk_rows is None:
        chunk_rows = min(DEFAULT_CHUNK_ROWS, -(-T // max(workers, 1)))
    bounds = [(s, min(s + chunk_rows, T)) for s in range(0, T, chunk_rows)]
    args = (pair, config.statistic, config.data_size, config.master_seed, config.model_prior, fixed_model)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _table_chunk(*args, *b), bounds))
    else:
        parts = [_table_chunk(*args, *b) for b in bounds]
    return ReferenceTable(
        pair=pair,
        statistic=config.statistic,
        n=config.data_size,
        master_seed=config.master_seed,
        model_prior=config.model_prior,
        models=np.concatenate([p[0] for p in parts]),
        thetas=np.concatenate([p[1] for p in parts])[:, None],
        summaries=np.concatenate([p[2] for p in parts]),
    )


def mad_scales(summaries: np.ndarray) -> np.ndarray:
    """Per-coordinate median absolute deviation (unscaled)."""
    med = np.median(summaries, axis=0)
    return np.median(np.abs(summaries - med), axis=0)


def compute_distances(table: ReferenceTable, eta_obs, metric: Metric = Metric.EUCLIDEAN) -> np.ndarray:
    eta_obs = np.atleast_1d(np.asarray(eta_obs, dtype=np.float64))
    d = table.summaries.shape[1]
    if eta_obs.shape != (d,):
        raise ValueError(f"observed summary has dimension {eta_obs.size}, table summaries have {d}")
    diff = table.summaries - eta_obs
    if metric is Metric.NORMALIZED_EUCLIDEAN:
        scale = mad_scales(table.summaries)
        keep = scale > 0
        if not keep.all():
            warnings.warn(
                f"dropping {int((~keep).sum())} summary coordinate(s) with zero MAD from the distance",
                stacklevel=2,
            )
        diff = diff[:, keep] / scale[keep]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


@dataclass(frozen=True)
class AcceptedSet:
    indices: np.ndarray
    distances: np.ndarray
    models: np.ndarray
    rule: AcceptanceRule | None = None

    @property
    def n1(self) -> int:
        return int(np.count_nonzero(self.models == 1))

    @property
    def n2(self) -> int:
        return int(np.count_nonzero(self.models == 2))

    @property
    def size(self) -> int:
        return int(self.indices.size)

    def __len__(self) -> int:
        return self.size


def accept(table: ReferenceTable, distances: np.ndarray, rule: AcceptanceRule) -> AcceptedSet:
    """Apply the acceptance rule.

    KNearest returns rows by non-decreasing distance, ties broken by the lower
    row index. FixedTolerance returns rows in index order.
    """
    distances = np.asarray(distances, dtype=np.float64)
    if distances.shape != (table.size,):
        raise ValueError("one distance per table row is required")
    if isinstance(rule, KNearest):
        if rule.k > table.size:
            raise ValueError(f"k={rule.k} exceeds the table size {table.size}")
        idx = np.argsort(distances, kind="stable")[: rule.k]
    else:
        idx = np.flatnonzero(distances <= rule.eps)
    return AcceptedSet(idx, distances[idx], table.models[idx], rule)


@dataclass(frozen=True)
class PosteriorEstimate:
    """Estimated model probabilities and log Bayes factor.

    ``log_bf`` is +/-inf when one model has no support; ``infinite`` flags it.
    """

    prob: tuple[float, float]
    log_bf: float
    estimator: str
    rule: AcceptanceRule | None = None
    n1: int = 0
    n2: int = 0
    separated: bool = False

    @property
    def infinite(self) -> bool:
        return math.isinf(self.log_bf)

    @property
    def prob1(self) -> float:
        return self.prob[0]


class EmptyAcceptanceError(ValueError):
    pass


def estimate_posterior_frequency(acc: AcceptedSet, prior: ModelPrior = UNIFORM_PRIOR) -> PosteriorEstimate:
    """Acceptance frequencies; B12 = p2 N1 / (p1 N2)."""
    if acc.size == 0:
        raise EmptyAcceptanceError("no simulations were accepted")
    n1, n2 = acc.n1, acc.n2
    with np.errstate(divide="ignore"):
        log_bf = float(np.log(n1) - np.log(n2) - prior.log_odds)
    return PosteriorEstimate((n1 / acc.size, n2 / acc.size), log_bf, "frequency", acc.rule, n1, n2)


def log_bf_standard_error(acc: AcceptedSet) -> float:
    """Delta-method standard error of log(N1/N2)."""
    if acc.n1 == 0 or acc.n2 == 0:
        return math.inf
    return math.sqrt(1.0 / acc.n1 + 1.0 / acc.n2)


def epanechnikov_weights(distances: np.ndarray, bandwidth: float | None = None) -> np.ndarray:
    """1 - (d / d_max)^2 on [0, d_max]; uniform when every distance is equal."""
    distances = np.asarray(distances, dtype=np.float64)
    d_max = float(distances.max()) if bandwidth is None else float(bandwidth)
    if bandwidth is None and (d_max == 0.0 or np.all(distances == d_max)):
        return np.ones_like(distances)
    if d_max <= 0:
        raise ValueError("bandwidth must be > 0")
    return np.clip(1.0 - (distances / d_max) ** 2, 0.0, None)


def estimate_posterior_logistic(
    acc: AcceptedSet,
    table: ReferenceTable,
    eta_obs,
    bandwidth: float | None = None,
    prior: ModelPrior | None = None,
) -> PosteriorEstimate:
    """Local weighted logistic regression of the model indicator on eta - eta_obs.

    ``bandwidth`` defaults to the largest accepted distance. ``prior``, when it
    differs from the table's simulation prior, shifts the fitted log odds
    accordingly.
    """
    eta_obs = np.atleast_1d(np.asarray(eta_obs, dtype=np.float64))
    dim = table.summaries.shape[1]
    if acc.size < dim + 2:
        raise ValueError(f"logistic estimate needs at least {dim + 2} accepted rows, got {acc.size}")
    X = table.summaries[acc.indices] - eta_obs
    y = (acc.models == 1).astype(np.float64)
    fit = fit_weighted_logistic(X, y, epanechnikov_weights(acc.distances, bandwidth))
    log_bf = float(logit(fit.prob)) - table.model_prior.log_odds
    target = table.model_prior if prior is None else prior
    p1 = float(expit(log_bf + target.log_odds)) if 0 < target.p1 < 1 else target.p1
    return PosteriorEstimate((p1, 1.0 - p1), log_bf, "logistic", acc.rule, acc.n1, acc.n2, fit.separated)


def abc_single_model(
    pair: ModelPairSpec, model_index: int, y: Dataset, config: AbcConfig, workers: int = 1
) -> np.ndarray:
    """Rejection ABC under one model: the accepted parameter draws."""
    check_compatible(pair, y)
    config = replace(config, data_size=y.n)
    table = generate_reference_table(pair, config, workers=workers, fixed_model=model_index)
    eta = summarize(config.statistic, y)
    acc = accept(table, compute_distances(table, eta, config.metric), config.rule)
    if acc.size == 0:
        warnings.warn("no simulations were accepted; returning an empty sample", stacklevel=2)
    return table.thetas[acc.indices, 0]


@dataclass
class ModelChoiceResult:
    frequency: PosteriorEstimate
    logistic: PosteriorEstimate | None
    accepted: AcceptedSet
    table: ReferenceTable = field(repr=False)


def abc_model_choice(
    pair: ModelPairSpec,
    y: Dataset,
    config: AbcConfig,
    table: ReferenceTable | None = None,
    logistic: bool = True,
) -> ModelChoiceResult:
    """Algorithm-2 style model choice for one observed dataset."""
    check_compatible(pair, y)
    if table is None:
        table = generate_reference_table(pair, replace(config, data_size=y.n))
    eta = summarize(config.statistic, y)
    acc = accept(table, compute_distances(table, eta, config.metric), config.rule)
    freq = estimate_posterior_frequency(acc, table.model_prior)
    loc = estimate_posterior_logistic(acc, table, eta) if logistic else None
    return ModelChoiceResult(freq, loc, acc, table)


# -- CSV round trip -------------------------------------------------------------


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def table_to_csv(table: ReferenceTable) -> str:
    buf = io.StringIO()
    buf.write(f"# pair={table.pair.label()}\n")
    buf.write(f"# statistic={table.statistic.value}\n")
    buf.write(f"# n={table.n}\n")
    buf.write(f"# T={table.size}\n")
    buf.write(f"# seed={table.master_seed}\n")
    buf.write(f"# model_prior={fmt(table.model_prior.p1)},{fmt(table.model_prior.p2)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    k = table.thetas.shape[1]
    d = table.summaries.shape[1]
    writer.writerow(["m"] + [f"theta_{j + 1}" for j in range(k)] + [f"eta_{j + 1}" for j in range(d)])
    for m, th, eta in zip(table.models, table.thetas, table.summaries):
        writer.writerow([int(m)] + [fmt(v) for v in th] + [fmt(v) for v in eta])
    return buf.getvalue()


def read_table_csv(path: str | Path) -> ReferenceTable:
    return table_from_csv(Path(path).read_text(encoding="utf-8"))


def table_from_csv(text: str) -> ReferenceTable:
    meta: dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        elif line:
            body.append(line)
    header = body[0].split(",")
    k = sum(h.startswith("theta_") for h in header)
    d = sum(h.startswith("eta_") for h in header)
    values = np.array([[float(v) for v in row.split(",")] for row in body[1:]]).reshape(-1, 1 + k + d)
    p1, p2 = (float(v) for v in meta["model_prior"].split(","))
    return ReferenceTable(
        pair=ModelPairSpec.from_label(meta["pair"]),
        statistic=SummaryStatistic(meta["statistic"]),
        n=int(meta["n"]),
        master_seed=int(meta["seed"]),
        model_prior=ModelPrior(p1, p2),
        models=values[:, 0].astype(np.int8),
        thetas=values[:, 1 : 1 + k],
        summaries=values[:, 1 + k :],
    )
