"""
Utilities package for ensembench.

Contains logging configuration shared by the library and the CLI.
"""

from .logging_config import cell_context, get_logger, run_log_path, setup_logging

__all__ = ['setup_logging', 'get_logger', 'run_log_path', 'cell_context']
