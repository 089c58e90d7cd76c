"""Exact and ABC Bayes factors for two toy model pairs.

The count pair (Poisson against geometric) and the normal pair (two known
variances, a shared normal prior on the mean) both admit closed-form
marginal likelihoods, so the Bayes factor computed from the full data can be
set beside the one computed from a summary statistic, and beside what
rejection ABC estimates.
"""

from __future__ import annotations

from .abc import (
    AbcConfig,
    AcceptedSet,
    EmptyAcceptanceError,
    FixedTolerance,
    KNearest,
    Metric,
    PosteriorEstimate,
    ReferenceTable,
    abc_model_choice,
    abc_single_model,
    accept,
    compute_distances,
    estimate_posterior_frequency,
    estimate_posterior_logistic,
    generate_reference_table,
    parse_rule,
)
from .diagnostics import (
    DecisionRule,
    Source,
    agreement_report,
    false_allocation_rates,
    stability_summary,
)
from .models import UNIFORM_PRIOR, Dataset, ModelPairSpec, ModelPrior, PairKind
from .oracles import (
    count_eta_limit,
    exact_logs,
    lemma1_limit,
    log_bayes_factor_eta,
    log_bayes_factor_full,
    log_discrepancy_ratio,
    log_marginal_eta,
    log_marginal_full,
    posterior_prob_from_log_bf,
)
from .rng import RngStream, derive_stream
from .summaries import SummaryStatistic, summarize

__version__ = "0.1.0"
