"""Desk-scale experiments on the two model pairs.

Each runner returns an :class:`ExperimentReport`; :func:`run_experiment`
dispatches by name. Aggregators are plain functions of the row dicts so the
CSV footer can be recomputed from the parsed CSV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .abc import (
    AbcConfig,
    EmptyAcceptanceError,
    KNearest,
    Metric,
    accept,
    compute_distances,
    estimate_posterior_frequency,
    estimate_posterior_logistic,
    generate_reference_table,
)
from .diagnostics import DecisionRule, Source, false_allocation_rates, pearson, pseudo_observed
from .logistic import LogisticConvergenceError
from .models import Dataset, ModelPairSpec, simulate_rows
from .oracles import count_eta_limit, exact_logs, lemma1_limit, posterior_prob_from_log_bf
from .report import ExperimentReport
from .rng import Addresses, block_words
from .sampling import poisson_sample, uniform_sample
from .summaries import SummaryStatistic, summarize

EXPERIMENTS = ("fig1", "lemma-convergence", "normal-discrepancy", "abc-vs-exact", "false-alloc")

# Substream reserved for the shared reference table of abc-vs-exact.
_TABLE_STREAM = 1 << 63

DEFAULT_LEMMA_GRID = (100, 1_000, 10_000, 100_000)
DEFAULT_THETA0 = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    master_seed: int = 42
    pair: ModelPairSpec | None = None
    reps: int | None = None
    n: int | None = None
    statistic: SummaryStatistic | None = None
    rule: object | None = None
    table_size: int | None = None
    metric: Metric = Metric.NORMALIZED_EUCLIDEAN
    theta0: tuple[float, ...] = DEFAULT_THETA0
    n_grid: tuple[int, ...] = DEFAULT_LEMMA_GRID
    workers: int = 1
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.reps is not None and self.reps < 1:
            raise ValueError("replicate count must be >= 1")
        if self.n is not None and self.n < 1:
            raise ValueError("n must be >= 1")
        if list(self.n_grid) != sorted(set(self.n_grid)):
            raise ValueError("n grid must be strictly increasing")


def _sd(values: np.ndarray) -> float:
    return float(np.std(values, ddof=1)) if values.size > 1 else 0.0


def _col(rows, name, **where) -> np.ndarray:
    return np.array(
        [np.nan if r[name] is None else r[name] for r in rows if all(r[k] == v for k, v in where.items())],
        dtype=np.float64,
    )


def _exact_columns(pair: ModelPairSpec, y: Dataset) -> dict:
    b12, beta, g = exact_logs(pair, y)
    return {"log_b12": b12, "log_beta": beta, "log_g": g}


# -- fig1 -----------------------------------------------------------------------


def _fig1_aggregates(rows) -> dict:
    out = {}
    for m in (1, 2):
        b12 = _col(rows, "log_b12", model=m)
        beta = _col(rows, "log_beta", model=m)
        if b12.size == 0:
            continue
        sd12, sdeta = _sd(b12), _sd(beta)
        out[f"model{m}_count"] = int(b12.size)
        out[f"model{m}_sd_log_b12"] = sd12
        out[f"model{m}_sd_log_beta"] = sdeta
        out[f"model{m}_sd_ratio"] = sdeta / sd12 if sd12 > 0 else math.nan
        out[f"model{m}_max_abs_log_b12"] = float(np.max(np.abs(b12)))
        out[f"model{m}_max_abs_log_beta"] = float(np.max(np.abs(beta)))
    return out


def run_fig1(spec: ExperimentSpec) -> ExperimentReport:
    """Exact log B12 against log B^eta (Sum statistic), count pair, theta from the prior."""
    pair = spec.pair or ModelPairSpec.poisson_geometric()
    if not pair.is_count:
        raise ValueError("fig1 uses the Poisson/geometric pair")
    reps = spec.reps or 10_000
    n = spec.n or 50
    rows = []
    for m in (1, 2):
        _, theta, data = pseudo_observed(pair, m, reps, n, spec.master_seed)
        for r in range(reps):
            rows.append({"replicate": r, "model": m, "theta": float(theta[r]),
                         **_exact_columns(pair, Dataset(data[r]))})
    return ExperimentReport(
        "fig1",
        ["replicate", "model", "theta", "log_b12", "log_beta", "log_g"],
        rows,
        _fig1_aggregates,
        plot=dict(x="log_b12", y="log_beta", split="model", split_label="data from model",
                  title="log scale, n=%d" % n, xlabel="true log Bayes factor log B12",
                  ylabel="log Bayes factor from sum statistic"),
    )


# -- lemma convergence -----------------------------------------------------------


def _lemma_aggregates(rows) -> dict:
    out = {}
    sources = sorted({r["source"] for r in rows}, key=str)
    ns = sorted({r["n"] for r in rows})
    for s in sources:
        for n in ns:
            for col in ("gap", "gap_derived"):
                gaps = _col(rows, col, source=s, n=n)
                if gaps.size:
                    out[f"{s}_n{n}_median_{col}"] = float(np.median(gaps))
                    out[f"{s}_n{n}_max_{col}"] = float(np.max(gaps))
    return out


def lemma_data(pair: ModelPairSpec, master_seed: int, stream: int, n: int, theta0: float | None) -> Dataset:
    """i.i.d. Poisson(theta0) counts, or Uniform(0, 1) reals for the normal pair.

    Positions 0..n-1 of ``stream``; a smaller n reads a prefix of a larger one.
    """
    addr = Addresses(master_seed, np.full(n, stream, dtype=np.uint64), np.arange(n, dtype=np.uint64))
    if pair.is_count:
        return Dataset(poisson_sample(addr, theta0))
    return Dataset(uniform_sample(addr, 0.0, 1.0))


def run_lemma_convergence(spec: ExperimentSpec) -> ExperimentReport:
    """B^eta against its large-n limit along an increasing n grid, several seeds.

    ``gap`` is measured against :func:`lemma1_limit`, ``gap_derived`` against
    :func:`count_eta_limit` (both are 1 for the normal pair).
    """
    pair = spec.pair or ModelPairSpec.poisson_geometric()
    seeds = spec.reps or 10
    grid = tuple(spec.n_grid)
    if spec.n is not None:
        # n caps the grid: keep the smaller grid points, end at n
        grid = tuple(g for g in grid if g < spec.n) + (spec.n,)
    sources = list(spec.theta0) if pair.is_count else [None]
    rows = []
    for si, theta0 in enumerate(sources):
        # stated limit and the one the S-marginals converge to; equal for the normal pair
        lim = math.exp(lemma1_limit(theta0)) if pair.is_count else 1.0
        lim_derived = math.exp(count_eta_limit(theta0)) if pair.is_count else 1.0
        label = f"poisson-{theta0!r}" if pair.is_count else "uniform01"
        for s in range(seeds):
            stream = si * seeds + s
            full = lemma_data(pair, spec.master_seed, stream, grid[-1], theta0)
            for n in grid:
                y = Dataset(full.values[:n])
                ex = _exact_columns(pair, y)
                b_eta = math.exp(ex["log_beta"])
                rows.append({"source": label, "seed": s, "n": n, **ex, "b_eta": b_eta,
                             "limit": lim, "gap": abs(b_eta - lim),
                             "limit_derived": lim_derived, "gap_derived": abs(b_eta - lim_derived)})
    return ExperimentReport(
        "lemma-convergence",
        ["source", "seed", "n", "log_b12", "log_beta", "log_g", "b_eta", "limit", "gap",
         "limit_derived", "gap_derived"],
        rows,
        _lemma_aggregates,
        plot=dict(x="n", y="gap", split="source", split_label="data",
                  xlabel="sample size n", ylabel="|B^eta - limit|", title="convergence gap"),
    )


# -- normal discrepancy ---------------------------------------------------------


def _discrepancy_aggregates(rows) -> dict:
    out = {}
    for m in (1, 2):
        g = _col(rows, "log_g", model=m)
        if g.size:
            out[f"model{m}_count"] = int(g.size)
            out[f"model{m}_min_log_g"] = float(g.min())
            out[f"model{m}_median_log_g"] = float(np.median(g))
            out[f"model{m}_max_log_g"] = float(g.max())
    return out


def run_normal_discrepancy(spec: ExperimentSpec) -> ExperimentReport:
    """log g1/g2 for normal data generated at mu = 0 under each model."""
    pair = spec.pair or ModelPairSpec.normal(0.1, 10.0, 1.0)
    if pair.is_count:
        raise ValueError("normal-discrepancy uses the normal pair")
    reps = spec.reps or 10_000
    n = spec.n or 15
    rows = []
    for m in (1, 2):
        streams = np.array([2 * r + (m - 1) for r in range(reps)], dtype=np.uint64)
        _, _, data = simulate_rows(pair, spec.master_seed, streams, n, models=m, theta=0.0)
        for r in range(reps):
            rows.append({"replicate": r, "model": m, **_exact_columns(pair, Dataset(data[r]))})
    return ExperimentReport(
        "normal-discrepancy",
        ["replicate", "model", "log_b12", "log_beta", "log_g"],
        rows,
        _discrepancy_aggregates,
        plot=dict(x="log_g", hist=True, split="model", split_label="data from model",
                  xlabel="log discrepancy log g1(y)/g2(y)", ylabel="relative frequency",
                  title=f"n={n}, sigma1={pair.sigma1:g}, sigma2={pair.sigma2:g}"),
    )


# -- ABC vs exact -----------------------------------------------------------------


_PROB_COLUMNS = ("p_exact_full", "p_exact_eta", "p_abc_freq", "p_abc_logistic")


def _abc_vs_exact_aggregates(rows) -> dict:
    out = {"count": len(rows)}
    full = _col(rows, "p_exact_full")
    eta = _col(rows, "p_exact_eta")
    for name in ("p_abc_freq", "p_abc_logistic"):
        est = _col(rows, name)
        ok = np.isfinite(est)
        out[f"{name}_undefined"] = int((~ok).sum())
        for ref_name, ref in (("full", full), ("eta", eta)):
            if ok.sum() >= 1:
                dis = np.mean(np.sign(est[ok] - 0.5) != np.sign(ref[ok] - 0.5))
                out[f"{name}_disagreement_vs_{ref_name}"] = float(dis)
            corr = pearson(est[ok], ref[ok]) if ok.sum() >= 2 else None
            out[f"{name}_correlation_vs_{ref_name}"] = "undefined" if corr is None else corr
    dis = np.mean(np.sign(full - 0.5) != np.sign(eta - 0.5))
    out["exact_eta_disagreement_vs_full"] = float(dis)
    return out


def run_abc_vs_exact(spec: ExperimentSpec) -> ExperimentReport:
    """ABC frequency and local-logistic estimates against the exact posteriors."""
    pair = spec.pair or ModelPairSpec.poisson_geometric()
    if not pair.is_count:
        raise ValueError("abc-vs-exact uses the Poisson/geometric pair")
    reps = spec.reps or 100
    n = spec.n or 5
    config = AbcConfig(
        statistic=spec.statistic or SummaryStatistic.SUM,
        metric=spec.metric,
        rule=spec.rule or KNearest(500),
        table_size=spec.table_size or 100_000,
        data_size=n,
        master_seed=int(block_words(spec.master_seed, _TABLE_STREAM, 0)),
    )
    table = generate_reference_table(pair, config, workers=spec.workers)
    per_model = {1: (reps + 1) // 2, 2: reps // 2}
    rows = []
    for m in (1, 2):
        if per_model[m] == 0:
            continue
        _, _, data = pseudo_observed(pair, m, per_model[m], n, spec.master_seed)
        for r in range(per_model[m]):
            y = Dataset(data[r])
            ex = _exact_columns(pair, y)
            eta = summarize(config.statistic, y)
            acc = accept(table, compute_distances(table, eta, config.metric), config.rule)
            p_freq = p_log = None
            try:
                p_freq = estimate_posterior_frequency(acc, table.model_prior).prob1
                p_log = estimate_posterior_logistic(acc, table, eta).prob1
            except (EmptyAcceptanceError, LogisticConvergenceError, ValueError):
                pass
            rows.append({
                "replicate": r, "model": m, **ex,
                "p_exact_full": posterior_prob_from_log_bf(ex["log_b12"]),
                "p_exact_eta": posterior_prob_from_log_bf(ex["log_beta"]),
                "p_abc_freq": p_freq, "p_abc_logistic": p_log,
            })
    return ExperimentReport(
        "abc-vs-exact",
        ["replicate", "model", "log_b12", "log_beta", "log_g", *_PROB_COLUMNS],
        rows,
        _abc_vs_exact_aggregates,
        plot=dict(x="p_exact_full", y="p_abc_freq", xlabel="exact posterior probability of model 1",
                  ylabel="ABC estimate of P(M=1|y)", title=f"{config.statistic.value}, {config.rule}"),
    )


# -- false allocation ------------------------------------------------------------


def _false_alloc_aggregates(rows) -> dict:
    out = {}
    for rule in sorted({r["rule"] for r in rows}):
        for m in (1, 2):
            sel = [r for r in rows if r["rule"] == rule and r["true_model"] == m]
            if sel:
                wrong = sum(r["decided_model"] != m for r in sel)
                out[f"{rule}_model{m}_rate"] = wrong / len(sel)
    return out


def false_alloc_rules(spec: ExperimentSpec, n: int) -> list[DecisionRule]:
    rules = [DecisionRule(Source.EXACT_FULL), DecisionRule(Source.EXACT_ETA)]
    if spec.table_size:
        config = AbcConfig(
            statistic=spec.statistic or SummaryStatistic.SUM,
            metric=spec.metric,
            rule=spec.rule or KNearest(min(500, spec.table_size)),
            table_size=spec.table_size,
            data_size=n,
        )
        rules.append(DecisionRule(Source.ABC_FREQUENCY, config))
    return rules


def run_false_alloc(spec: ExperimentSpec) -> ExperimentReport:
    pair = spec.pair or ModelPairSpec.poisson_geometric()
    R = spec.reps or 500
    n = spec.n or 50
    rows = []
    for rule in spec.extra.get("rules") or false_alloc_rules(spec, n):
        summary = false_allocation_rates(pair, rule, R, n, spec.master_seed)
        for m, r, decided, p1 in summary.records:
            rows.append({"rule": summary.rule, "true_model": m, "replicate": r,
                         "decided_model": decided, "prob1": p1})
    return ExperimentReport(
        "false-alloc",
        ["rule", "true_model", "replicate", "decided_model", "prob1"],
        rows,
        _false_alloc_aggregates,
        plot=dict(x="replicate", y="prob1", split="true_model", split_label="true model",
                  xlabel="replicate", ylabel="P(M=1|y) used for the decision", title="false allocation"),
    )


RUNNERS = {
    "fig1": run_fig1,
    "lemma-convergence": run_lemma_convergence,
    "normal-discrepancy": run_normal_discrepancy,
    "abc-vs-exact": run_abc_vs_exact,
    "false-alloc": run_false_alloc,
}


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    return RUNNERS[spec.experiment](spec)
