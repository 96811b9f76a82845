"""
Data models package for ensembench.

Contains data classes representing:
- Experiment configuration (ExperimentConfig, EnsembleConfig, TrainConfig, ModelSpec, DatasetSpec)
- Evaluation reports (EvalReport, DiversityReport, NRACurve, CostReport)
"""

from .config import (
    Strategy,
    TrainConfig,
    ModelSpec,
    EnsembleConfig,
    DatasetSpec,
    ExperimentConfig,
    default_roster,
)
from .reports import (
    DiversityReport,
    NRACurve,
    CostReport,
    EvalReport,
)

__all__ = [
    # Configuration classes
    'Strategy',
    'TrainConfig',
    'ModelSpec',
    'EnsembleConfig',
    'DatasetSpec',
    'ExperimentConfig',
    'default_roster',

    # Report classes
    'DiversityReport',
    'NRACurve',
    'CostReport',
    'EvalReport',
]
