"""
Basic tests for ensembench project structure.
"""

import sys
import os
import unittest
from pathlib import Path

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))


class TestProjectStructure(unittest.TestCase):
    """Test that the project structure is set up correctly."""

    def setUp(self):
        """Set up test paths."""
        self.project_root = Path(__file__).parent.parent
        self.src_dir = self.project_root / "src"
        self.package_dir = self.src_dir / "ensembench"

    def test_package_directories_exist(self):
        """Test that all subpackages exist and are packages."""
        for name in ("nn", "ensembles", "metrics", "data", "models", "backend", "utils"):
            with self.subTest(package=name):
                package = self.package_dir / name
                self.assertTrue(package.is_dir(), f"Directory {package} does not exist")
                self.assertTrue((package / "__init__.py").is_file(),
                                f"{package} has no __init__.py")

    def test_main_files_exist(self):
        """Test that entry points exist."""
        required_files = [
            self.project_root / "main.py",
            self.project_root / "pyproject.toml",
            self.package_dir / "main.py",
            self.package_dir / "utils" / "logging_config.py",
            self.package_dir / "backend" / "exceptions.py",
        ]

        for file_path in required_files:
            with self.subTest(file=str(file_path)):
                self.assertTrue(file_path.is_file(), f"File {file_path} does not exist")

    def test_import_main_module(self):
        """Test that the CLI module can be imported."""
        try:
            from ensembench import main
            self.assertTrue(hasattr(main, 'main'), "main module should have a main function")
        except ImportError as e:
            self.fail(f"Could not import ensembench.main: {e}")

    def test_import_order_independent(self):
        """Test that the persistence module imports cleanly on its own."""
        from ensembench.backend import persistence
        from ensembench import ensembles

        self.assertTrue(hasattr(persistence, 'save_predictor'))
        self.assertTrue(hasattr(ensembles, 'train_ensemble'))

    def test_import_utils(self):
        """Test that utility modules can be imported."""
        from ensembench.utils import logging_config
        self.assertTrue(hasattr(logging_config, 'setup_logging'),
                        "logging_config should have setup_logging function")


if __name__ == "__main__":
    unittest.main()
