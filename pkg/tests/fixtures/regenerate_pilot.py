"""Recompute every pilot-frozen value into pilot.json.

    python3 tests/fixtures/regenerate_pilot.py

The pilot seed is deliberately different from the seed the tests run on, so
a "within +-0.05 of the pilot" check compares two independent Monte Carlo runs.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from abc_verdict.abc import AbcConfig, FixedTolerance, KNearest, Metric, generate_reference_table
from abc_verdict.diagnostics import DecisionRule, Source, agreement_report, false_allocation_rates, stability_summary
from abc_verdict.experiments import ExperimentSpec, run_abc_vs_exact, run_fig1
from abc_verdict.models import Dataset, ModelPairSpec
from abc_verdict.oracles import log_bayes_factor_eta, log_bayes_factor_full, posterior_prob_from_log_bf
from abc_verdict.diagnostics import pseudo_observed
from abc_verdict.summaries import SummaryStatistic

PILOT_SEED = 20111
OUT = Path(__file__).with_name("pilot.json")
COUNT = ModelPairSpec.poisson_geometric()
STABILITY_DATA = (0, 1, 2, 1, 0)


def exact_disagreement(seed: int, per_model: int = 500, n: int = 50) -> float:
    pairs = []
    for m in (1, 2):
        _, _, data = pseudo_observed(COUNT, m, per_model, n, seed)
        for row in data:
            y = Dataset(row)
            pairs.append((posterior_prob_from_log_bf(log_bayes_factor_full(COUNT, y)),
                          posterior_prob_from_log_bf(log_bayes_factor_eta(COUNT, y))))
    return agreement_report(pairs).disagreement_rate


def stability_iqr(seed: int) -> float:
    config = AbcConfig(SummaryStatistic.SUM, rule=KNearest(500), table_size=100_000, data_size=len(STABILITY_DATA))
    rule = DecisionRule(Source.ABC_FREQUENCY, config)
    summary = stability_summary(COUNT, rule, [Dataset(STABILITY_DATA)], K=10, master_seed=seed)
    return float(summary.iqr[0])


def abc_correlations(seed: int) -> dict:
    out = {}
    for stat in (SummaryStatistic.SUM_AND_LOG_FACT_PROD, SummaryStatistic.SUM):
        spec = ExperimentSpec("abc-vs-exact", master_seed=seed, n=5, statistic=stat, rule=FixedTolerance(0.0),
                              metric=Metric.EUCLIDEAN, table_size=1_000_000)
        agg = run_abc_vs_exact(spec).aggregates
        out[stat.value] = {k: agg[f"p_abc_freq_{k}"] for k in
                           ("correlation_vs_full", "correlation_vs_eta", "undefined")}
    return out


def main() -> None:
    t0 = time.perf_counter()
    fa = false_allocation_rates(COUNT, DecisionRule(Source.EXACT_FULL), 500, 100, PILOT_SEED)
    fig1 = run_fig1(ExperimentSpec("fig1", master_seed=PILOT_SEED)).aggregates
    pilot = {
        "seed": PILOT_SEED,
        "exact_full_false_alloc_n100_R500": {"model1": fa.rates[1], "model2": fa.rates[2], "tolerance": 0.05},
        "exact_eta_vs_full_disagreement_n50_1000": {"rate": exact_disagreement(PILOT_SEED), "tolerance": 0.05},
        "stability_iqr_T1e5_knn500_K10": {"data": list(STABILITY_DATA), "iqr": stability_iqr(PILOT_SEED),
                                          "bound": 0.1},
        "fig1": {f"model{m}": {"sd_ratio": fig1[f"model{m}_sd_ratio"],
                               "max_ratio": fig1[f"model{m}_max_abs_log_beta"] / fig1[f"model{m}_max_abs_log_b12"]}
                 for m in (1, 2)},
        "abc_vs_exact_T1e6_n5_exact_match": abc_correlations(PILOT_SEED),
    }
    OUT.write_text(json.dumps(pilot, indent=2, sort_keys=True) + "\n")
    print(json.dumps(pilot, indent=2, sort_keys=True))
    print(f"{time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
