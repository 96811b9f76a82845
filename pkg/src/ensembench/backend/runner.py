"""
Experiment runner.

Generates the dataset, trains every (model, seed) cell, evaluates it and
writes reports, curves and aggregate tables. A failing cell is logged and
recorded in the run log; the remaining cells still run.
"""

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ensembench.backend.exceptions import ExperimentError, SerializationError
from ensembench.backend.persistence import save_dataset, save_predictor
from ensembench.data.synth import SplitDataset, generate
from ensembench.ensembles.predictor import EnsemblePredictor
from ensembench.ensembles.trainers import train_ensemble
from ensembench.metrics.evaluation import (
    aggregate_curves,
    cost_report,
    diversity_report,
    nra_curve,
    rescore_diversity,
    uncertainty_histogram,
)
from ensembench.metrics.timing import exclusive_section, time_call
from ensembench.metrics.uncertainty import ENTROPY_UNIT, NLL_UNIT, accuracy, decompose, nll
from ensembench.models.config import EnsembleConfig, ExperimentConfig, Strategy
from ensembench.models.reports import CostReport, DiversityReport, EvalReport
from ensembench.utils.logging_config import cell_context, get_logger

logger = get_logger(__name__)

REPORT_FILE = "report.json"
CONFIG_FILE = "config.json"
RUN_LOG_FILE = "run_log.json"
DATASET_FILE = "dataset.bin"
SNAPSHOT_DIR = "snapshots"

CostReference = Tuple[float, float, int]


@dataclass
class CellResult:
    """Outcome of one (model, seed) cell."""

    model: str
    seed: int
    status: str
    report: Optional[EvalReport] = None
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        entry: Dict[str, Any] = {'model': self.model, 'seed': self.seed, 'status': self.status}
        if self.error is not None:
            entry['error'] = self.error
        return entry


@dataclass
class RunSummary:
    """All cell results of a run."""

    config_hash: str
    cells: List[CellResult] = field(default_factory=list)

    @property
    def reports(self) -> List[EvalReport]:
        return [c.report for c in self.cells if c.report is not None]

    @property
    def failed(self) -> List[CellResult]:
        return [c for c in self.cells if c.status != 'ok']


def write_json(path: Path, payload: Dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2)
        f.write('\n')


def write_csv(path: Path, config_hash: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    """Write a CSV whose first line is '# config_hash=<hash>'; None becomes an empty cell."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(f"# config_hash={config_hash}\n")
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow(['' if value is None else value for value in row])


def read_csv(path: Path) -> Tuple[str, List[Dict[str, str]]]:
    """Read a CSV written by write_csv; returns (config hash, rows)."""
    with open(path, 'r', encoding='utf-8', newline='') as f:
        first = f.readline().strip()
        if not first.startswith('# config_hash='):
            raise SerializationError(f"{path} has no config hash header")
        return first.split('=', 1)[1], list(csv.DictReader(f))


def evaluate_predictor(
    predictor: EnsemblePredictor,
    dataset: SplitDataset,
    config: ExperimentConfig,
    model: EnsembleConfig,
    seed: int,
    train_seconds: float,
    reference: Optional[CostReference] = None,
) -> EvalReport:
    """
    Evaluate a trained predictor on validation, ID test and OOD test data.

    Args:
        predictor: Trained predictor
        dataset: Dataset it was trained on
        config: Experiment settings (betas, thresholds, bins, cost weights)
        model: Roster entry of the predictor
        seed: Training seed of the cell
        train_seconds: Measured training time
        reference: Cost triple of the reference single network; None means
            the predictor is its own reference when it is a single network,
            otherwise relative costs stay null

    Returns:
        EvalReport
    """
    eval_seconds, (id_probs, ood_probs) = time_call(
        lambda: (predictor.predict_members(dataset.id_test_x),
                 predictor.predict_members(dataset.ood_test_x)),
        repeats=config.eval_repeats,
    )
    val_probs = predictor.predict(dataset.val_x)
    id_mean = id_probs.mean(axis=0)
    upper = math.log2(predictor.num_classes)

    triples = {'id': decompose(id_probs), 'ood': decompose(ood_probs)}
    mean_uncertainty: Dict[str, Dict[str, float]] = {}
    histograms: Dict[str, Dict[str, List[int]]] = {}
    edges: List[float] = []
    for split, triple in triples.items():
        values = {'tu': triple.tu, 'au': triple.au, 'eu': triple.eu}
        mean_uncertainty[split] = {
            name: float(np.mean(v)) if len(v) else 0.0 for name, v in values.items()
        }
        histograms[split] = {}
        for name, v in values.items():
            histograms[split][name], edges = uncertainty_histogram(v, upper, config.histogram_bins)

    combined_probs = np.concatenate([id_probs, ood_probs], axis=1)
    _, combined_labels = dataset.combined_test()
    curve = nra_curve(combined_probs, combined_labels, config.n_thresholds)

    betas = sorted(set(config.betas) | {1.0})
    first = diversity_report(id_probs, ood_probs, betas[0])
    diversity = [first] + [rescore_diversity(first, beta) for beta in betas[1:]]

    if reference is None and predictor.strategy == Strategy.SINGLE:
        reference = (train_seconds, eval_seconds, predictor.parameter_count)
    cost = cost_report(train_seconds, eval_seconds, predictor.parameter_count,
                       reference, config.cost_weights)

    return EvalReport(
        model=model.name,
        strategy=model.strategy.value,
        members=predictor.members,
        seed=seed,
        config_hash=config.config_hash(),
        id_accuracy=accuracy(id_mean, dataset.id_test_y),
        id_nll=nll(id_mean, dataset.id_test_y),
        val_accuracy=accuracy(val_probs, dataset.val_y),
        val_nll=nll(val_probs, dataset.val_y),
        combined_accuracy=accuracy(combined_probs.mean(axis=0), combined_labels),
        mean_uncertainty=mean_uncertainty,
        histograms=histograms,
        histogram_edges=edges,
        nra=curve,
        diversity=diversity,
        cost=cost,
        units={'entropy': ENTROPY_UNIT, 'nll': NLL_UNIT},
    )


def _mean_std(values: Sequence[Optional[float]]) -> Tuple[Optional[float], Optional[float]]:
    if not values or any(v is None for v in values):
        return None, None
    array = np.asarray(values, dtype=np.float64)
    return float(array.mean()), float(array.std())


def _group_by_model(reports: Sequence[EvalReport]) -> Dict[str, List[EvalReport]]:
    groups: Dict[str, List[EvalReport]] = {}
    for report in reports:
        groups.setdefault(report.model, []).append(report)
    for group in groups.values():
        group.sort(key=lambda r: r.seed)
    return groups


def check_single_hash(reports: Sequence[EvalReport]) -> str:
    """
    Return the common config hash of a set of reports.

    Raises:
        ExperimentError: If there are no reports or their hashes differ
    """
    if not reports:
        raise ExperimentError("no reports to aggregate")
    hashes = sorted({r.config_hash for r in reports})
    if len(hashes) > 1:
        raise ExperimentError(f"refusing to aggregate reports from different configs: {hashes}")
    return hashes[0]


def _dq1(report: EvalReport) -> DiversityReport:
    found = report.diversity_at(1.0)
    if found is None:
        if not report.diversity:
            raise ExperimentError(f"{report.model} seed {report.seed}: report has no diversity data")
        found = rescore_diversity(report.diversity[0], 1.0)
    return found


SUMMARY_METRICS = (
    ('id_accuracy', lambda r: r.id_accuracy),
    ('id_nll', lambda r: r.id_nll),
    ('val_accuracy', lambda r: r.val_accuracy),
    ('val_nll', lambda r: r.val_nll),
    ('combined_accuracy', lambda r: r.combined_accuracy),
    ('dq_1', lambda r: _dq1(r).dq_mean),
    ('member_dq_1', lambda r: _dq1(r).member_dq_mean),
    ('idd', lambda r: _dq1(r).idd_mean),
    ('oodd', lambda r: _dq1(r).oodd_mean),
    ('tu_id', lambda r: r.mean_uncertainty['id']['tu']),
    ('au_id', lambda r: r.mean_uncertainty['id']['au']),
    ('eu_id', lambda r: r.mean_uncertainty['id']['eu']),
    ('tu_ood', lambda r: r.mean_uncertainty['ood']['tu']),
    ('au_ood', lambda r: r.mean_uncertainty['ood']['au']),
    ('eu_ood', lambda r: r.mean_uncertainty['ood']['eu']),
    ('parameter_count', lambda r: float(r.cost.parameter_count)),
    ('train_seconds', lambda r: r.cost.train_seconds),
    ('eval_seconds', lambda r: r.cost.eval_seconds),
    ('relative_train', lambda r: r.cost.relative_train),
    ('relative_eval', lambda r: r.cost.relative_eval),
    ('relative_params', lambda r: r.cost.relative_params),
    ('weighted_cost', lambda r: r.cost.weighted_cost),
)


def summary_rows(reports: Sequence[EvalReport]) -> Tuple[List[str], List[List[Any]]]:
    """Per-model mean and population std of every summary metric."""
    header = ['model', 'strategy', 'members', 'seeds']
    for name, _ in SUMMARY_METRICS:
        header += [f"{name}_mean", f"{name}_std"]
    rows = []
    for model, group in _group_by_model(reports).items():
        row: List[Any] = [model, group[0].strategy, group[0].members, len(group)]
        for _, getter in SUMMARY_METRICS:
            row.extend(_mean_std([getter(r) for r in group]))
        rows.append(row)
    return header, rows


def bubble_rows(reports: Sequence[EvalReport]) -> Tuple[List[str], List[List[Any]]]:
    """Accuracy, DQ_1 and weighted cost per model."""
    header = ['model', 'accuracy', 'dq_1', 'weighted_cost']
    rows = []
    for model, group in _group_by_model(reports).items():
        rows.append([
            model,
            _mean_std([r.id_accuracy for r in group])[0],
            _mean_std([_dq1(r).dq_mean for r in group])[0],
            _mean_std([r.cost.weighted_cost for r in group])[0],
        ])
    return header, rows


def sweep_beta(reports: Sequence[EvalReport], betas: Sequence[float]) -> List[Dict[str, Any]]:
    """
    DQ_beta per model and beta, recomputed from stored diversities.

    Returns:
        Rows with model, beta, dq_mean, dq_std and member_dq_mean across seeds
    """
    rows = []
    for model, group in _group_by_model(reports).items():
        for beta in betas:
            rescored = [rescore_diversity(_dq1(r), beta) for r in group]
            dq_mean, dq_std = _mean_std([d.dq_mean for d in rescored])
            rows.append({
                'model': model,
                'beta': float(beta),
                'dq_mean': dq_mean,
                'dq_std': dq_std,
                'member_dq_mean': float(np.mean([d.member_dq_mean for d in rescored])),
            })
    return rows


def load_reports(output_dir: Path) -> List[EvalReport]:
    """
    Load every report.json below an output directory.

    Reports follow the roster order of config.json when present.
    """
    paths = sorted(output_dir.glob(f"*/seed_*/{REPORT_FILE}"))
    reports = []
    for path in paths:
        try:
            with open(path, 'r', encoding='utf-8') as f:
                reports.append(EvalReport.from_dict(json.load(f)))
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
            raise SerializationError(f"Could not read report {path}: {e}") from e

    config_path = output_dir / CONFIG_FILE
    if config_path.exists():
        with open(config_path, 'r', encoding='utf-8') as f:
            order = [m.get('name') for m in json.load(f).get('models', [])]
        rank = {name: i for i, name in enumerate(order)}
        reports.sort(key=lambda r: (rank.get(r.model, len(rank)), r.model, r.seed))
    logger.info(f"Loaded {len(reports)} report(s) from {output_dir}")
    return reports


def write_aggregates(reports: Sequence[EvalReport], output_dir: Path,
                     betas: Optional[Sequence[float]] = None) -> str:
    """
    Write summary.csv, bubble.csv, nra_<model>.csv and dq_beta_sweep.csv.

    Raises:
        ExperimentError: If the reports come from different configurations

    Returns:
        The common config hash
    """
    config_hash = check_single_hash(reports)

    header, rows = summary_rows(reports)
    write_csv(output_dir / "summary.csv", config_hash, header, rows)
    header, rows = bubble_rows(reports)
    write_csv(output_dir / "bubble.csv", config_hash, header, rows)

    for model, group in _group_by_model(reports).items():
        curves = aggregate_curves([r.nra for r in group])
        write_csv(output_dir / f"nra_{model}.csv", config_hash,
                  ['threshold', 'nra_mean', 'nra_std', 'rejected_mean'],
                  list(zip(curves['threshold'], curves['nra_mean'],
                           curves['nra_std'], curves['rejected_mean'])))

    if betas is None:
        betas = [d.beta for d in reports[0].diversity]
    write_beta_sweep(reports, betas, output_dir / "dq_beta_sweep.csv")
    logger.info(f"Wrote aggregate tables for {len(reports)} report(s) to {output_dir}")
    return config_hash


def write_beta_sweep(reports: Sequence[EvalReport], betas: Sequence[float], path: Path) -> None:
    config_hash = check_single_hash(reports)
    fields = ['model', 'beta', 'dq_mean', 'dq_std', 'member_dq_mean']
    rows = [[row[k] for k in fields] for row in sweep_beta(reports, betas)]
    write_csv(path, config_hash, fields, rows)


class ExperimentRunner:
    """
    Runs an experiment configuration end to end.

    Single-network cells run first so that every other cell of the same seed
    can report its cost relative to them.
    """

    def __init__(self, config: ExperimentConfig, output_dir: Optional[Path] = None):
        """
        Initialize the runner.

        Args:
            config: Validated experiment configuration
            output_dir: Overrides config.output_dir
        """
        config.validate()
        self.config = config
        self.output_dir = Path(output_dir if output_dir is not None else config.output_dir)
        self.config_hash = config.config_hash()
        self._references: Dict[int, CostReference] = {}

    def cell_dir(self, model: str, seed: int) -> Path:
        return self.output_dir / model / f"seed_{seed}"

    def prepare_dataset(self) -> SplitDataset:
        """Generate the dataset and export it next to the results."""
        dataset = generate(self.config.dataset)
        save_dataset(dataset, self.output_dir / DATASET_FILE, self.config_hash)
        return dataset

    def write_config(self) -> None:
        payload = self.config.to_dict()
        payload['config_hash'] = self.config_hash
        write_json(self.output_dir / CONFIG_FILE, payload)

    def run_cell(self, model: EnsembleConfig, seed: int, dataset: SplitDataset) -> EvalReport:
        """
        Train, save and evaluate one (model, seed) cell.

        Returns:
            EvalReport, also written to <model>/seed_<s>/report.json
        """
        logger.info(f"Cell {model.name} seed {seed}: training")
        config = model.with_seed(seed)
        cell_dir = self.cell_dir(model.name, seed)
        train_seconds, predictor = time_call(
            lambda: train_ensemble(config, dataset, work_dir=cell_dir / SNAPSHOT_DIR)
        )
        predictor.config_hash = self.config_hash
        save_predictor(predictor, cell_dir / "predictor")

        report = evaluate_predictor(predictor, dataset, self.config, model, seed,
                                    train_seconds, self._references.get(seed))
        if model.strategy == Strategy.SINGLE and seed not in self._references:
            self._references[seed] = (report.cost.train_seconds, report.cost.eval_seconds,
                                      report.cost.parameter_count)

        write_json(cell_dir / REPORT_FILE, report.to_dict())
        write_csv(cell_dir / "nra.csv", self.config_hash,
                  ['threshold', 'nra', 'rejected_fraction'], report.nra.rows())
        logger.info(f"Cell {model.name} seed {seed}: accuracy={report.id_accuracy:.4f} "
                    f"nll={report.id_nll:.4f} train={train_seconds:.2f}s")
        return report

    def _safe_cell(self, model: EnsembleConfig, seed: int, dataset: SplitDataset) -> CellResult:
        try:
            # with exclusive_timing, training and evaluation of a cell run alone
            with cell_context(model.name, seed), exclusive_section(self.config.exclusive_timing):
                report = self.run_cell(model, seed, dataset)
            return CellResult(model.name, seed, 'ok', report=report)
        except Exception as e:
            logger.exception(f"Cell {model.name} seed {seed} failed: {e}")
            return CellResult(model.name, seed, 'failed', error=f"{type(e).__name__}: {e}")

    def _run_cells(self, cells: List[Tuple[EnsembleConfig, int]], dataset: SplitDataset) -> List[CellResult]:
        if self.config.workers <= 1 or len(cells) <= 1:
            return [self._safe_cell(model, seed, dataset) for model, seed in cells]
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            futures = [pool.submit(self._safe_cell, model, seed, dataset) for model, seed in cells]
            return [f.result() for f in futures]

    def run(self) -> RunSummary:
        """
        Run every (model, seed) cell and write all artifacts.

        Returns:
            RunSummary with one CellResult per cell
        """
        self.output_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"Running experiment {self.config_hash} into {self.output_dir}")
        self.write_config()
        dataset = self.prepare_dataset()

        singles = [(m, s) for m in self.config.models if m.strategy == Strategy.SINGLE
                   for s in self.config.seeds]
        others = [(m, s) for m in self.config.models if m.strategy != Strategy.SINGLE
                  for s in self.config.seeds]
        if not singles:
            logger.warning("No single model in the roster; relative and weighted costs will be null")
        results = self._run_cells(singles, dataset) + self._run_cells(others, dataset)

        order = {m.name: i for i, m in enumerate(self.config.models)}
        results.sort(key=lambda c: (order[c.model], self.config.seeds.index(c.seed)))
        summary = RunSummary(self.config_hash, results)

        write_json(self.output_dir / RUN_LOG_FILE, {
            'config_hash': self.config_hash,
            'cells': [c.to_dict() for c in results],
        })
        if summary.reports:
            write_aggregates(summary.reports, self.output_dir, self.config.betas)
        logger.info(f"Experiment finished: {len(summary.reports)} ok, {len(summary.failed)} failed")
        return summary


def report_from_directory(output_dir: Path) -> str:
    """Re-aggregate the reports stored in an output directory."""
    return write_aggregates(load_reports(output_dir), output_dir)


def sweep_beta_from_directory(output_dir: Path, betas: Sequence[float]) -> Path:
    """Write dq_beta_sweep.csv for stored reports without retraining."""
    path = output_dir / "dq_beta_sweep.csv"
    write_beta_sweep(load_reports(output_dir), betas, path)
    return path
