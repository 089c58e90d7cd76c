"""Summary statistics.

All statistics sort each row before reducing it, which makes them exactly
(bitwise) invariant under permutation of the observations. That matters for
exact-match acceptance, where two datasets with the same multiset of values
must land at distance zero.
"""

from __future__ import annotations

import enum

import numpy as np
from scipy.special import gammaln

from .models import Dataset, ModelPairSpec


class IncompatibleStatisticError(ValueError):
    pass


class SummaryStatistic(enum.Enum):
    SUM = "sum"
    SUM_AND_LOG_FACT_PROD = "sum-logfact"
    MEAN = "mean"
    MEAN_AND_SUM_SQ = "mean-ss"
    IDENTITY = "identity"
    # Zero-dimensional statistic: every dataset summarizes to the same point.
    EMPTY = "empty"

    @property
    def count_only(self) -> bool:
        return self in (SummaryStatistic.SUM, SummaryStatistic.SUM_AND_LOG_FACT_PROD)

    def output_dim(self, n: int) -> int:
        return {
            SummaryStatistic.SUM: 1,
            SummaryStatistic.SUM_AND_LOG_FACT_PROD: 2,
            SummaryStatistic.MEAN: 1,
            SummaryStatistic.MEAN_AND_SUM_SQ: 2,
            SummaryStatistic.IDENTITY: n,
            SummaryStatistic.EMPTY: 0,
        }[self]


def log_factorial_sum(sorted_rows: np.ndarray) -> np.ndarray:
    """Row sums of log(y!) via log-gamma; rows must already be sorted."""
    return gammaln(sorted_rows + 1.0).sum(axis=1)


def summarize_rows(stat: SummaryStatistic, data: np.ndarray) -> np.ndarray:
    """Summaries of a ``(rows, n)`` array, returned as ``(rows, dim)``."""
    data = np.sort(np.asarray(data, dtype=np.float64), axis=1)
    rows, n = data.shape
    if stat.count_only and not (np.all(data >= 0) and np.all(data == np.floor(data))):
        raise IncompatibleStatisticError(f"{stat.value} needs non-negative integer data")
    if stat is SummaryStatistic.IDENTITY:
        return data
    if stat is SummaryStatistic.EMPTY:
        return np.empty((rows, 0))
    total = data.sum(axis=1)
    if stat is SummaryStatistic.SUM:
        return total[:, None]
    if stat is SummaryStatistic.SUM_AND_LOG_FACT_PROD:
        return np.column_stack([total, log_factorial_sum(data)])
    mean = total / n
    if stat is SummaryStatistic.MEAN:
        return mean[:, None]
    resid = data - mean[:, None]
    return np.column_stack([mean, (resid * resid).sum(axis=1)])


def summarize(stat: SummaryStatistic, data: Dataset) -> np.ndarray:
    return summarize_rows(stat, data.values[None, :])[0]


def check_statistic(stat: SummaryStatistic, pair: ModelPairSpec) -> None:
    if stat.count_only and not pair.is_count:
        raise IncompatibleStatisticError(f"{stat.value} is only defined for the count pair")
    if stat in (SummaryStatistic.MEAN, SummaryStatistic.MEAN_AND_SUM_SQ) and pair.is_count:
        raise IncompatibleStatisticError(f"{stat.value} is a normal-pair statistic")
