"""
Logging configuration for ensembench.

Every experiment run logs to its own rotating file named after the config
hash. Records carry the hash and, inside a worker, the (model, seed) cell
being trained, so interleaved output from parallel cells stays attributable.
"""

import logging
import logging.handlers
import sys
import threading
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

NO_CELL = "-"

_cell_state = threading.local()


def run_log_path(output_dir: Path, config_hash: str) -> Path:
    """Log file of one run: <output_dir>/run_<config_hash>.log."""
    return Path(output_dir) / f"run_{config_hash}.log"


def current_cell() -> str:
    """Cell label of the calling thread, or '-' outside a cell."""
    return getattr(_cell_state, 'label', NO_CELL)


@contextmanager
def cell_context(model: str, seed: int) -> Iterator[None]:
    """Tag every record logged by this thread with 'model/seed_<s>'."""
    previous = current_cell()
    _cell_state.label = f"{model}/seed_{seed}"
    try:
        yield
    finally:
        _cell_state.label = previous


class RunContextFilter(logging.Filter):
    """Stamps records with the run's config hash and the current cell."""

    def __init__(self, run_id: str):
        super().__init__()
        self.run_id = run_id

    def filter(self, record: logging.LogRecord) -> bool:
        record.run_id = self.run_id
        record.cell = current_cell()
        return True


def setup_logging(
    level: int = logging.INFO,
    log_file: Optional[str] = None,
    run_id: str = NO_CELL,
    max_bytes: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5
) -> None:
    """
    Set up logging configuration for an experiment run.

    Args:
        level: Logging level (default: INFO)
        log_file: Path to log file (default: ~/.ensembench/logs/ensembench.log)
        run_id: Config hash written into every record
        max_bytes: Maximum size of log file before rotation
        backup_count: Number of backup log files to keep
    """
    if log_file is None:
        log_dir = Path.home() / ".ensembench" / "logs"
        log_dir.mkdir(parents=True, exist_ok=True)
        log_file = str(log_dir / "ensembench.log")
    else:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)

    formatter = logging.Formatter(
        '%(asctime)s - %(run_id)s [%(cell)s] %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )
    context = RunContextFilter(run_id)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    console_handler.addFilter(context)
    root_logger.addHandler(console_handler)

    try:
        file_handler = logging.handlers.RotatingFileHandler(
            log_file,
            maxBytes=max_bytes,
            backupCount=backup_count,
            encoding='utf-8'
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        file_handler.addFilter(context)
        root_logger.addHandler(file_handler)

        logging.info(f"Logging run {run_id} to file: {log_file}")

    except (OSError, PermissionError) as e:
        logging.warning(f"Could not set up file logging: {e}")


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance for a specific module.

    Args:
        name: Name of the logger (usually __name__)

    Returns:
        Logger instance
    """
    return logging.getLogger(name)
