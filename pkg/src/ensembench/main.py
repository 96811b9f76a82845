#!/usr/bin/env python3
"""
Command-line entry point for ensembench.

Verbs:
    generate     generate the dataset and export it
    run          train and evaluate every (model, seed) cell
    sweep-beta   recompute DQ_beta for stored reports
    report       re-aggregate stored reports
    tune         grid-search one model's hyperparameters
    init-config  write the default experiment configuration
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from ensembench.backend.config import ConfigurationManager
from ensembench.backend.exceptions import EnsembenchError
from ensembench.utils.logging_config import get_logger, run_log_path, setup_logging

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser with one subcommand per verb."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="Path to a JSON experiment config (default: built-in experiment).")
    common.add_argument("--out", type=Path, default=None,
                        help="Output directory (default: the config's output_dir).")
    common.add_argument("--seed-override", type=int, default=None, metavar="N",
                        help="Run seed N only instead of the configured seed list.")
    common.add_argument("--exclusive-timing", action="store_true",
                        help="Run one (model, seed) cell at a time while other workers wait.")
    common.add_argument("--workers", type=int, default=None,
                        help="Number of (model, seed) cells to run in parallel.")
    common.add_argument("--log-level", default=None,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="Logging level (default: the config's log_level).")

    parser = argparse.ArgumentParser(
        prog="ensembench",
        description="Train and evaluate neural-network ensembles on synthetic ID/OOD shape data.",
    )
    verbs = parser.add_subparsers(dest="verb", required=True)
    verbs.add_parser("generate", parents=[common], help="Generate and export the dataset.")
    verbs.add_parser("run", parents=[common], help="Run the full experiment.")
    sweep = verbs.add_parser("sweep-beta", parents=[common],
                             help="Recompute DQ_beta from stored reports.")
    sweep.add_argument("--betas", type=float, nargs="+", default=None,
                       help="Beta values (default: the config's betas).")
    verbs.add_parser("report", parents=[common], help="Aggregate stored reports.")
    tune = verbs.add_parser("tune", parents=[common],
                            help="Grid-search hyperparameters of one model by validation NLL.")
    tune.add_argument("--model", required=True, help="Roster name of the model to tune.")
    init = verbs.add_parser("init-config", help="Write the default experiment config.")
    init.add_argument("path", type=Path, help="Destination JSON file.")
    return parser


def _apply_overrides(manager: ConfigurationManager, args: argparse.Namespace) -> List[str]:
    """Apply CLI overrides and return the validation warnings of the result."""
    config = manager.config
    if args.seed_override is not None:
        manager.apply_seed_override(args.seed_override)
    if args.out is not None:
        manager.apply_output_dir(args.out)
    if args.exclusive_timing:
        config.exclusive_timing = True
    if args.workers is not None:
        config.workers = args.workers
    return manager.validate_config()['warnings']


def _cmd_generate(manager: ConfigurationManager) -> int:
    from ensembench.backend.persistence import save_dataset
    from ensembench.data.synth import generate

    config = manager.config
    dataset = generate(config.dataset)
    path = Path(config.output_dir) / "dataset.bin"
    config_hash = config.config_hash()
    save_dataset(dataset, path, config_hash)
    print(json.dumps({'path': str(path), 'config_hash': config_hash, 'counts': dataset.counts()},
                     indent=2))
    return 0


def _cmd_run(manager: ConfigurationManager) -> int:
    from ensembench.backend.runner import ExperimentRunner

    summary = ExperimentRunner(manager.config).run()
    for cell in summary.failed:
        logger.error(f"Cell {cell.model} seed {cell.seed} failed: {cell.error}")
    return 1 if summary.failed else 0


def _cmd_sweep_beta(manager: ConfigurationManager, betas: Optional[List[float]]) -> int:
    from ensembench.backend.runner import sweep_beta_from_directory

    config = manager.config
    path = sweep_beta_from_directory(Path(config.output_dir), betas or config.betas)
    logger.info(f"Wrote {path}")
    return 0


def _cmd_report(manager: ConfigurationManager) -> int:
    from ensembench.backend.runner import report_from_directory

    config_hash = report_from_directory(Path(manager.config.output_dir))
    logger.info(f"Aggregated reports for config {config_hash}")
    return 0


def _cmd_tune(manager: ConfigurationManager, model_name: str) -> int:
    from ensembench.backend.runner import write_json
    from ensembench.data.synth import generate
    from ensembench.ensembles.tuning import grid_search

    config = manager.config
    model = config.model_by_name(model_name)
    if config.seeds:
        model = model.with_seed(config.seeds[0])
    result = grid_search(model, config.grid, generate(config.dataset))
    payload = result.to_dict()
    payload['config_hash'] = config.config_hash()
    path = Path(config.output_dir) / f"tuning_{model_name}.json"
    write_json(path, payload)
    logger.info(f"Best validation NLL {result.best_val_nll:.4f}; wrote {path}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the command-line interface."""
    args = build_parser().parse_args(argv)

    if args.verb == "init-config":
        setup_logging(logging.INFO)
        manager = ConfigurationManager()
        manager.reset_to_defaults()
        return 0 if manager.export_config(args.path) else 1

    try:
        manager = ConfigurationManager(args.config)
        warnings = _apply_overrides(manager, args)
        config = manager.config
        config_hash = config.config_hash()
        level = args.log_level or config.log_level
        setup_logging(getattr(logging, level.upper(), logging.INFO),
                      log_file=str(run_log_path(Path(config.output_dir), config_hash)),
                      run_id=config_hash)
        logger.info(f"ensembench {args.verb}")
        for warning in warnings:
            logger.warning(warning)

        if args.verb == "generate":
            return _cmd_generate(manager)
        if args.verb == "run":
            return _cmd_run(manager)
        if args.verb == "sweep-beta":
            return _cmd_sweep_beta(manager, args.betas)
        if args.verb == "report":
            return _cmd_report(manager)
        if args.verb == "tune":
            return _cmd_tune(manager, args.model)
    except EnsembenchError as e:
        logging.error(f"{args.verb} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
