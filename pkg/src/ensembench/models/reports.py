"""
Evaluation report data models.

Represents diversity scores, non-rejected-accuracy curves, cost accounting
and the per-(model, seed) evaluation report written by the runner.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np


@dataclass
class DiversityReport:
    """Per-member ID/OOD diversity and diversity quality at one beta."""

    per_member_idd: List[float]
    per_member_oodd: List[float]
    idd_mean: float
    oodd_mean: float
    per_member_dq: List[float]
    dq_mean: float  # DQ of (idd_mean, oodd_mean), not the mean of per_member_dq
    beta: float

    @property
    def members(self) -> int:
        return len(self.per_member_idd)

    @property
    def member_dq_mean(self) -> float:
        """Mean of the per-member DQ scores."""
        return float(np.mean(self.per_member_dq)) if self.per_member_dq else 0.0

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for serialization."""
        return {
            'beta': self.beta,
            'per_member_idd': list(self.per_member_idd),
            'per_member_oodd': list(self.per_member_oodd),
            'idd_mean': self.idd_mean,
            'oodd_mean': self.oodd_mean,
            'per_member_dq': list(self.per_member_dq),
            'dq_mean': self.dq_mean,
            'member_dq_mean': self.member_dq_mean,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DiversityReport':
        """Create from dictionary."""
        return cls(
            per_member_idd=[float(v) for v in data['per_member_idd']],
            per_member_oodd=[float(v) for v in data['per_member_oodd']],
            idd_mean=float(data['idd_mean']),
            oodd_mean=float(data['oodd_mean']),
            per_member_dq=[float(v) for v in data['per_member_dq']],
            dq_mean=float(data['dq_mean']),
            beta=float(data['beta']),
        )


@dataclass
class NRACurve:
    """Non-rejected accuracy over an ascending grid of TU thresholds (bits)."""

    thresholds: List[float]
    nra: List[float]
    rejected_fraction: List[float]

    def __len__(self) -> int:
        return len(self.thresholds)

    def rows(self) -> List[List[float]]:
        """CSV rows: threshold, nra, rejected_fraction."""
        return [list(row) for row in zip(self.thresholds, self.nra, self.rejected_fraction)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'thresholds': list(self.thresholds),
            'nra': list(self.nra),
            'rejected_fraction': list(self.rejected_fraction),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'NRACurve':
        return cls(
            thresholds=[float(v) for v in data['thresholds']],
            nra=[float(v) for v in data['nra']],
            rejected_fraction=[float(v) for v in data['rejected_fraction']],
        )


@dataclass
class CostReport:
    """
    Measured cost of one ensemble.

    Relative fields compare against a reference single network and stay None
    when no reference is available.
    """

    train_seconds: float
    eval_seconds: float
    parameter_count: int
    relative_train: Optional[float] = None
    relative_eval: Optional[float] = None
    relative_params: Optional[float] = None
    weighted_cost: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'train_seconds': self.train_seconds,
            'eval_seconds': self.eval_seconds,
            'parameter_count': self.parameter_count,
            'relative_train': self.relative_train,
            'relative_eval': self.relative_eval,
            'relative_params': self.relative_params,
            'weighted_cost': self.weighted_cost,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CostReport':
        def optional(key: str) -> Optional[float]:
            value = data.get(key)
            return None if value is None else float(value)

        return cls(
            train_seconds=float(data['train_seconds']),
            eval_seconds=float(data['eval_seconds']),
            parameter_count=int(data['parameter_count']),
            relative_train=optional('relative_train'),
            relative_eval=optional('relative_eval'),
            relative_params=optional('relative_params'),
            weighted_cost=optional('weighted_cost'),
        )


@dataclass
class EvalReport:
    """Everything measured for one trained (model, seed) cell."""

    model: str
    strategy: str
    members: int
    seed: int
    config_hash: str
    id_accuracy: float
    id_nll: float
    val_accuracy: float
    val_nll: float
    combined_accuracy: float
    mean_uncertainty: Dict[str, Dict[str, float]]
    histograms: Dict[str, Dict[str, List[int]]]
    histogram_edges: List[float]
    nra: NRACurve
    diversity: List[DiversityReport]
    cost: CostReport
    units: Dict[str, str] = field(default_factory=lambda: {'entropy': 'bits', 'nll': 'nats'})

    def diversity_at(self, beta: float) -> Optional[DiversityReport]:
        """Diversity report computed at the given beta, if any."""
        for report in self.diversity:
            if abs(report.beta - beta) < 1e-12:
                return report
        return None

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for serialization."""
        return {
            'model': self.model,
            'strategy': self.strategy,
            'members': self.members,
            'seed': self.seed,
            'config_hash': self.config_hash,
            'units': dict(self.units),
            'id_accuracy': self.id_accuracy,
            'id_nll': self.id_nll,
            'val_accuracy': self.val_accuracy,
            'val_nll': self.val_nll,
            'combined_accuracy': self.combined_accuracy,
            'mean_uncertainty': {k: dict(v) for k, v in self.mean_uncertainty.items()},
            'histograms': {k: {name: list(c) for name, c in v.items()} for k, v in self.histograms.items()},
            'histogram_edges': list(self.histogram_edges),
            'nra': self.nra.to_dict(),
            'diversity': [d.to_dict() for d in self.diversity],
            'cost': self.cost.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EvalReport':
        """Create from dictionary."""
        return cls(
            model=data['model'],
            strategy=data['strategy'],
            members=int(data['members']),
            seed=int(data['seed']),
            config_hash=data['config_hash'],
            id_accuracy=float(data['id_accuracy']),
            id_nll=float(data['id_nll']),
            val_accuracy=float(data['val_accuracy']),
            val_nll=float(data['val_nll']),
            combined_accuracy=float(data['combined_accuracy']),
            mean_uncertainty={k: {n: float(x) for n, x in v.items()}
                              for k, v in data.get('mean_uncertainty', {}).items()},
            histograms={k: {n: [int(c) for c in counts] for n, counts in v.items()}
                        for k, v in data.get('histograms', {}).items()},
            histogram_edges=[float(e) for e in data.get('histogram_edges', [])],
            nra=NRACurve.from_dict(data['nra']),
            diversity=[DiversityReport.from_dict(d) for d in data.get('diversity', [])],
            cost=CostReport.from_dict(data['cost']),
            units=dict(data.get('units', {'entropy': 'bits', 'nll': 'nats'})),
        )
