"""
Diversity quality, non-rejected accuracy and cost accounting.

OOD points carry a negative label and therefore count as incorrect at every
rejection threshold.
"""

import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from ensembench.backend.exceptions import DimensionError, ValidationError
from ensembench.metrics.uncertainty import decompose, ensemble_mean
from ensembench.models.reports import CostReport, DiversityReport, NRACurve
from ensembench.nn.tensor import Tensor, as_tensor
from ensembench.utils.logging_config import get_logger

logger = get_logger(__name__)

DEFAULT_COST_WEIGHTS: Tuple[float, float, float] = (0.7, 0.2, 0.1)


def member_diversity(member_probs: npt.ArrayLike) -> Tensor:
    """
    Fraction of points where each member's label differs from the ensemble's.

    Args:
        member_probs: [M, B, K] member distributions

    Returns:
        [M] diversities in [0, 1]
    """
    probs = as_tensor(member_probs)
    base = np.argmax(ensemble_mean(probs), axis=1)
    if probs.shape[1] == 0:
        return np.zeros(probs.shape[0])
    return np.mean(np.argmax(probs, axis=2) != base[None, :], axis=1).astype(np.float64)


def dq_beta(idd: float, oodd: float, beta: float = 1.0) -> float:
    """
    Weighted harmonic mean of (1 - idd) and oodd.

    OODD counts beta times as much as ID agreement; beta = 1 gives the plain
    harmonic mean.

    Raises:
        ValidationError: If idd or oodd lie outside [0, 1] or beta <= 0
    """
    if not (0.0 <= idd <= 1.0 and 0.0 <= oodd <= 1.0):
        raise ValidationError(f"diversities must lie in [0, 1], got idd={idd}, oodd={oodd}")
    if not beta > 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    b2 = beta * beta
    agreement = 1.0 - idd
    denominator = b2 * agreement + oodd
    if denominator == 0.0:
        return 0.0
    return (1.0 + b2) * agreement * oodd / denominator


def _diversity_from(idd: Sequence[float], oodd: Sequence[float], beta: float) -> DiversityReport:
    idd_mean = float(np.mean(idd))
    oodd_mean = float(np.mean(oodd))
    return DiversityReport(
        per_member_idd=[float(v) for v in idd],
        per_member_oodd=[float(v) for v in oodd],
        idd_mean=idd_mean,
        oodd_mean=oodd_mean,
        per_member_dq=[dq_beta(i, o, beta) for i, o in zip(idd, oodd)],
        dq_mean=dq_beta(idd_mean, oodd_mean, beta),
        beta=float(beta),
    )


def diversity_report(id_probs: npt.ArrayLike, ood_probs: npt.ArrayLike, beta: float = 1.0) -> DiversityReport:
    """
    Per-member IDD, OODD and DQ_beta.

    The ensemble-level dq_mean is DQ_beta of the mean IDD and mean OODD.

    Args:
        id_probs: [M, B1, K] member outputs on the ID test set
        ood_probs: [M, B2, K] member outputs on the OOD test set
        beta: OODD weight

    Raises:
        DimensionError: If M or K differ between the two sets
    """
    id_probs = as_tensor(id_probs)
    ood_probs = as_tensor(ood_probs)
    if id_probs.ndim != 3 or ood_probs.ndim != 3:
        raise DimensionError(f"expected [M, B, K] arrays, got {id_probs.shape} and {ood_probs.shape}")
    if id_probs.shape[0] != ood_probs.shape[0] or id_probs.shape[2] != ood_probs.shape[2]:
        raise DimensionError(
            f"ID and OOD outputs disagree on members or classes: {id_probs.shape} vs {ood_probs.shape}"
        )
    return _diversity_from(member_diversity(id_probs), member_diversity(ood_probs), beta)


def rescore_diversity(report: DiversityReport, beta: float) -> DiversityReport:
    """Recompute DQ at another beta from stored per-member diversities."""
    return _diversity_from(report.per_member_idd, report.per_member_oodd, beta)


def threshold_grid(num_classes: int, n_thresholds: int = 201) -> Tensor:
    """Evenly spaced thresholds on [0, log2 K], both ends included."""
    if n_thresholds < 2:
        raise ValidationError(f"n_thresholds must be >= 2, got {n_thresholds}")
    return np.linspace(0.0, math.log2(num_classes), n_thresholds)


def nra_from_scores(tu: npt.ArrayLike, correct: npt.ArrayLike,
                    thresholds: npt.ArrayLike) -> Tuple[Tensor, Tensor]:
    """
    Non-rejected accuracy for given uncertainties and correctness flags.

    A point is kept at threshold t when its TU <= t. An empty kept set
    scores NRA 1.0 with everything rejected.

    Args:
        tu: [N] total uncertainty per point
        correct: [N] booleans, False for every OOD point
        thresholds: Ascending thresholds

    Returns:
        (nra, rejected_fraction), one value per threshold
    """
    tu = as_tensor(tu)
    correct = np.asarray(correct, dtype=bool)
    taus = as_tensor(thresholds)
    if tu.shape != correct.shape or tu.ndim != 1:
        raise DimensionError(f"tu {tu.shape} and correct {correct.shape} must be equal 1-D shapes")
    if np.any(np.diff(taus) < 0):
        raise ValidationError("thresholds must be ascending")

    order = np.argsort(tu, kind='stable')
    sorted_tu = tu[order]
    cumulative = np.concatenate([[0], np.cumsum(correct[order])])
    kept = np.searchsorted(sorted_tu, taus, side='right')
    total = len(tu)
    with np.errstate(divide='ignore', invalid='ignore'):
        nra = np.where(kept > 0, cumulative[kept] / np.maximum(kept, 1), 1.0)
    rejected = 1.0 - kept / total if total else np.ones(len(taus))
    return nra.astype(np.float64), np.asarray(rejected, dtype=np.float64)


def nra_curve(
    member_probs: npt.ArrayLike,
    labels: npt.ArrayLike,
    n_thresholds: int = 201,
    thresholds: Optional[npt.ArrayLike] = None,
) -> NRACurve:
    """
    Non-rejected accuracy curve on a combined ID + OOD set.

    Args:
        member_probs: [M, N, K] member outputs on the combined set
        labels: [N] class labels, negative for OOD points
        n_thresholds: Grid size when thresholds is omitted
        thresholds: Explicit ascending thresholds in bits

    Returns:
        NRACurve
    """
    probs = as_tensor(member_probs)
    y = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 3 or y.shape != (probs.shape[1],):
        raise DimensionError(f"labels {y.shape} do not match member outputs {probs.shape}")
    triple = decompose(probs)
    correct = np.argmax(probs.mean(axis=0), axis=1) == y
    taus = threshold_grid(probs.shape[2], n_thresholds) if thresholds is None else as_tensor(thresholds)
    nra, rejected = nra_from_scores(triple.tu, correct, taus)
    return NRACurve(thresholds=taus.tolist(), nra=nra.tolist(), rejected_fraction=rejected.tolist())


def aggregate_curves(curves: Sequence[NRACurve]) -> Dict[str, List[float]]:
    """
    Mean and population std of NRA per threshold across runs.

    Raises:
        DimensionError: If the curves use different threshold grids
    """
    if not curves:
        raise ValidationError("no curves to aggregate")
    grid = curves[0].thresholds
    for curve in curves[1:]:
        if len(curve.thresholds) != len(grid) or not np.allclose(curve.thresholds, grid, rtol=0, atol=1e-12):
            raise DimensionError("cannot aggregate NRA curves over different threshold grids")
    nra = np.array([c.nra for c in curves])
    rejected = np.array([c.rejected_fraction for c in curves])
    return {
        'threshold': list(grid),
        'nra_mean': nra.mean(axis=0).tolist(),
        'nra_std': nra.std(axis=0).tolist(),
        'rejected_mean': rejected.mean(axis=0).tolist(),
    }


def uncertainty_histogram(values: npt.ArrayLike, upper: float, bins: int = 20) -> Tuple[List[int], List[float]]:
    """
    Binned counts of uncertainty values over [0, upper].

    Returns:
        (counts, bin edges)
    """
    if bins < 1 or not upper > 0:
        raise ValidationError(f"need bins >= 1 and upper > 0, got bins={bins}, upper={upper}")
    clipped = np.clip(as_tensor(values), 0.0, upper)
    counts, edges = np.histogram(clipped, bins=bins, range=(0.0, upper))
    return counts.astype(int).tolist(), edges.tolist()


def cost_report(
    train_seconds: float,
    eval_seconds: float,
    parameter_count: int,
    reference: Optional[Tuple[float, float, int]] = None,
    weights: Sequence[float] = DEFAULT_COST_WEIGHTS,
) -> CostReport:
    """
    Cost of an ensemble, relative to a reference single network.

    Args:
        train_seconds: Measured training wall time
        eval_seconds: Measured evaluation wall time
        parameter_count: Stored parameters
        reference: (train_seconds, eval_seconds, parameter_count) of the
            reference; relative fields stay None without one
        weights: Weights of the relative train, eval and parameter factors

    Raises:
        ValidationError: If weights do not sum to 1 or a reference value is not positive
    """
    if len(weights) != 3 or abs(sum(weights) - 1.0) > 1e-9:
        raise ValidationError(f"cost weights must be three values summing to 1, got {list(weights)}")
    report = CostReport(float(train_seconds), float(eval_seconds), int(parameter_count))
    if reference is None:
        return report
    if any(not value > 0 for value in reference):
        raise ValidationError(f"reference costs must be positive, got {reference}")
    report.relative_train = train_seconds / reference[0]
    report.relative_eval = eval_seconds / reference[1]
    report.relative_params = parameter_count / reference[2]
    report.weighted_cost = (weights[0] * report.relative_train
                            + weights[1] * report.relative_eval
                            + weights[2] * report.relative_params)
    return report
