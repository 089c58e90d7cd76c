"""Monte Carlo checks on model-choice procedures.

False allocation rates, agreement between two posterior-probability
sequences, and repeat-run stability of ABC estimates.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .abc import (
    AbcConfig,
    ReferenceTable,
    abc_model_choice,
    fmt,
    generate_reference_table,
)
from .models import Dataset, ModelPairSpec, simulate_rows
from .oracles import log_bayes_factor_eta, log_bayes_factor_full, posterior_prob_from_log_bf
from .rng import block_words


class Source(enum.Enum):
    EXACT_FULL = "exact-full"
    EXACT_ETA = "exact-eta"
    ABC_FREQUENCY = "abc-frequency"
    ABC_LOGISTIC = "abc-logistic"

    @property
    def is_abc(self) -> bool:
        return self in (Source.ABC_FREQUENCY, Source.ABC_LOGISTIC)


@dataclass(frozen=True)
class DecisionRule:
    """Decide model 1 when P(M=1|y) >= threshold (ties go to model 1)."""

    source: Source
    config: AbcConfig | None = None
    threshold: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.source.is_abc and self.config is None:
            raise ValueError(f"{self.source.value} needs an AbcConfig")

    @property
    def name(self) -> str:
        return self.source.value

    def decide(self, prob1: float) -> int:
        return 1 if prob1 >= self.threshold else 2

    def prob1(self, pair: ModelPairSpec, y: Dataset, table: ReferenceTable | None = None) -> float:
        if self.source is Source.EXACT_FULL:
            return posterior_prob_from_log_bf(log_bayes_factor_full(pair, y))
        if self.source is Source.EXACT_ETA:
            return posterior_prob_from_log_bf(log_bayes_factor_eta(pair, y))
        logistic = self.source is Source.ABC_LOGISTIC
        result = abc_model_choice(pair, y, self.config, table=table, logistic=logistic)
        return result.logistic.prob1 if logistic else result.frequency.prob1


@dataclass
class ConfusionSummary:
    rule: str
    R: int
    rates: dict[int, float]
    # (true model, replicate, decided model, prob1)
    records: list[tuple[int, int, int, float]] = field(repr=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rule", "true_model", "replicate", "decided_model", "prob1"])
        for m, r, d, p in self.records:
            w.writerow([self.rule, m, r, d, fmt(p)])
        buf.write(f"# R={self.R} rate_model1={fmt(self.rates[1])} rate_model2={fmt(self.rates[2])}\n")
        return buf.getvalue()


def replicate_stream(replicate: int, true_model: int) -> int:
    return 2 * replicate + (true_model - 1)


def pseudo_observed(
    pair: ModelPairSpec, true_model: int, R: int, n: int, master_seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """R datasets from ``true_model`` with parameters from its prior.

    Returns (stream indices, parameters, data rows).
    """
    streams = np.array([replicate_stream(r, true_model) for r in range(R)], dtype=np.uint64)
    _, theta, data = simulate_rows(pair, master_seed, streams, n, models=true_model)
    return streams, theta, data


def table_seed_for(master_seed: int, stream: int, n: int) -> int:
    """Seed of the ABC reference table attached to one replicate stream.

    Drawn past the dataset's own positions so it never overlaps them.
    """
    return int(block_words(master_seed, stream, n + 2))


def false_allocation_rates(
    pair: ModelPairSpec,
    rule: DecisionRule,
    R: int,
    n: int,
    master_seed: int,
    shared_table: bool = False,
) -> ConfusionSummary:
    """Simulate R pseudo-observed datasets per true model and tabulate wrong decisions.

    ABC rules get a fresh reference table per replicate unless
    ``shared_table`` is set, in which case one table seeded by the rule's own
    config is reused for every dataset.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    shared = None
    if rule.source.is_abc and shared_table:
        shared = generate_reference_table(pair, replace(rule.config, data_size=n))
    records = []
    wrong = {1: 0, 2: 0}
    for m in (1, 2):
        streams, _, data = pseudo_observed(pair, m, R, n, master_seed)
        for r in range(R):
            y = Dataset(data[r])
            table = shared
            if rule.source.is_abc and table is None:
                seed = table_seed_for(master_seed, int(streams[r]), n)
                table = generate_reference_table(pair, replace(rule.config, data_size=n, master_seed=seed))
            p1 = rule.prob1(pair, y, table)
            decided = rule.decide(p1)
            wrong[m] += decided != m
            records.append((m, r, decided, p1))
    return ConfusionSummary(rule.name, R, {m: wrong[m] / R for m in (1, 2)}, records)


@dataclass
class AgreementReport:
    disagreement_rate: float
    correlation: float | None  # None when either sequence has zero variance
    mae: float
    count: int
    threshold: float
    pairs: list[tuple[float, float]] = field(repr=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "p_first", "p_second", "disagree"])
        for i, (a, b) in enumerate(self.pairs):
            w.writerow([i, fmt(a), fmt(b), int(_side(a, self.threshold) != _side(b, self.threshold))])
        corr = "undefined" if self.correlation is None else fmt(self.correlation)
        buf.write(
            f"# count={self.count} disagreement_rate={fmt(self.disagreement_rate)} "
            f"correlation={corr} mae={fmt(self.mae)}\n"
        )
        return buf.getvalue()


def _side(p: float, threshold: float) -> int:
    return (p > threshold) - (p < threshold)


def pearson(a: np.ndarray, b: np.ndarray) -> float | None:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    da, db = a - a.mean(), b - b.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0.0:
        return None
    return float(np.clip((da @ db) / denom, -1.0, 1.0))


def agreement_report(pairs, threshold: float = 0.5) -> AgreementReport:
    """Compare two probability sequences.

    A pair disagrees when its members sit on different sides of the
    threshold; a value exactly at the threshold is its own side, so a pair
    agrees at the boundary only if both members are on it.
    """
    pairs = [(float(a), float(b)) for a, b in pairs]
    if len(pairs) < 2:
        raise ValueError("agreement_report needs at least two pairs")
    arr = np.array(pairs)
    disagree = sum(_side(a, threshold) != _side(b, threshold) for a, b in pairs)
    return AgreementReport(
        disagreement_rate=disagree / len(pairs),
        correlation=pearson(arr[:, 0], arr[:, 1]),
        mae=float(np.mean(np.abs(arr[:, 0] - arr[:, 1]))),
        count=len(pairs),
        threshold=threshold,
        pairs=pairs,
    )


@dataclass
class StabilitySummary:
    # one row per dataset: (min, q1, median, q3, max)
    five_numbers: np.ndarray
    probs: np.ndarray  # (datasets, K)

    @property
    def iqr(self) -> np.ndarray:
        return self.five_numbers[:, 3] - self.five_numbers[:, 1]


def repeat_seed(master_seed: int, repeat: int) -> int:
    return int(block_words(master_seed, repeat, 0))


def stability_summary(
    pair: ModelPairSpec,
    rule: DecisionRule,
    datasets,
    K: int,
    master_seed: int,
    seeds=None,
) -> StabilitySummary:
    """Re-run the estimate K times per dataset, each repeat on its own table seed.

    ``seeds`` overrides the per-repeat table seeds.
    """
    if K < 2:
        raise ValueError("K must be >= 2")
    datasets = list(datasets)
    if seeds is None:
        seeds = [repeat_seed(master_seed, k) for k in range(K)]
    if len(seeds) != K:
        raise ValueError("need exactly K seeds")
    probs = np.empty((len(datasets), K))
    for k, seed in enumerate(seeds):
        tables: dict[int, ReferenceTable] = {}
        for i, y in enumerate(datasets):
            table = None
            if rule.source.is_abc:
                if y.n not in tables:
                    tables[y.n] = generate_reference_table(
                        pair, replace(rule.config, data_size=y.n, master_seed=int(seed))
                    )
                table = tables[y.n]
            probs[i, k] = rule.prob1(pair, y, table)
    five = np.column_stack(
        [probs.min(axis=1), *np.percentile(probs, [25, 50, 75], axis=1), probs.max(axis=1)]
    )
    return StabilitySummary(five, probs)
