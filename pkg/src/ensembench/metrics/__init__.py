"""
Uncertainty, diversity, rejection and cost metrics.
"""

from .uncertainty import (
    ENTROPY_UNIT,
    NLL_UNIT,
    UncertaintyTriple,
    entropy_bits,
    ensemble_mean,
    decompose,
    nll,
    accuracy,
)
from .evaluation import (
    DEFAULT_COST_WEIGHTS,
    member_diversity,
    dq_beta,
    diversity_report,
    rescore_diversity,
    threshold_grid,
    nra_from_scores,
    nra_curve,
    aggregate_curves,
    uncertainty_histogram,
    cost_report,
)
from .timing import time_call, exclusive_section

__all__ = [
    'ENTROPY_UNIT',
    'NLL_UNIT',
    'UncertaintyTriple',
    'entropy_bits',
    'ensemble_mean',
    'decompose',
    'nll',
    'accuracy',
    'DEFAULT_COST_WEIGHTS',
    'member_diversity',
    'dq_beta',
    'diversity_report',
    'rescore_diversity',
    'threshold_grid',
    'nra_from_scores',
    'nra_curve',
    'aggregate_curves',
    'uncertainty_histogram',
    'cost_report',
    'time_call',
    'exclusive_section',
]
