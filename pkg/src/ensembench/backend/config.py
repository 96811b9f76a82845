"""
Configuration management for ensembench experiments.

Handles loading, saving, overriding and validating experiment configuration.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional

from ensembench.backend.exceptions import ConfigurationError
from ensembench.models.config import ExperimentConfig, Strategy
from ensembench.utils.logging_config import get_logger

logger = get_logger(__name__)

# Advisory hyperparameter ranges; values outside produce warnings, not errors.
LR_RANGE = (1e-4, 5e-2)
L2_RANGE = (1e-7, 1e-1)
FAST_MULTIPLIER_RANGE = (0.1, 1.0)
INPUT_REPETITION_RANGE = (0.0, 0.8)


class ConfigurationManager:
    """
    Manages an experiment configuration file.

    Without a path the manager serves the default experiment. Unlike a
    preference file, an unreadable or invalid experiment file is an error and
    never replaced by defaults.
    """

    def __init__(self, config_path: Optional[Path] = None):
        """
        Initialize the configuration manager.

        Args:
            config_path: Path to a JSON experiment file (optional)
        """
        self.config_path = config_path
        self._config: Optional[ExperimentConfig] = None
        self._loaded = False

        logger.debug(f"Configuration manager initialized with path: {self.config_path}")

    @property
    def config(self) -> ExperimentConfig:
        """
        Get the current experiment configuration, loading it on first access.

        Returns:
            ExperimentConfig instance
        """
        if not self._loaded:
            self.load()
        assert self._config is not None
        return self._config

    def load(self) -> ExperimentConfig:
        """
        Load and validate configuration from file.

        Returns:
            Loaded ExperimentConfig instance

        Raises:
            ConfigurationError: If the file is missing, corrupt or invalid
        """
        try:
            logger.debug(f"Loading configuration from {self.config_path or '<defaults>'}")
            config = ExperimentConfig.load_from_file(self.config_path)
            config.validate()
        except ConfigurationError as e:
            logger.error(f"Failed to load configuration: {e}")
            raise
        self._config = config
        self._loaded = True
        logger.info(f"Configuration loaded ({len(config.models)} models, "
                    f"{len(config.seeds)} seeds, hash {config.config_hash()})")
        return config

    def save(self) -> bool:
        """
        Save current configuration to file.

        Returns:
            True if successful, False otherwise
        """
        if not self._loaded or self._config is None:
            logger.warning("No configuration to save")
            return False
        if self.config_path is None:
            logger.warning("No configuration path set")
            return False

        try:
            logger.debug(f"Saving configuration to {self.config_path}")
            self._config.save_to_file(self.config_path)
            logger.info("Configuration saved successfully")
            return True
        except OSError as e:
            logger.error(f"Failed to save configuration: {e}")
            return False

    def reset_to_defaults(self) -> ExperimentConfig:
        """
        Reset configuration to the default experiment.

        Returns:
            New default ExperimentConfig instance
        """
        logger.info("Resetting configuration to defaults")
        self._config = ExperimentConfig.default()
        self._loaded = True
        return self._config

    def apply_seed_override(self, seed: int) -> None:
        """
        Replace the seed list with a single seed.

        Args:
            seed: Seed for the only run of every model
        """
        if seed < 0:
            raise ConfigurationError(f"seed must be non-negative, got {seed}")
        self.config.seeds = [seed]
        logger.info(f"Seed override: running seed {seed} only")

    def apply_output_dir(self, output_dir: Path) -> None:
        """Point the experiment at another output directory."""
        self.config.output_dir = str(output_dir)
        logger.debug(f"Output directory set to {output_dir}")

    def export_config(self, export_path: Path) -> bool:
        """
        Export configuration to a file.

        Args:
            export_path: Path to export the configuration

        Returns:
            True if successful, False otherwise
        """
        try:
            self.config.save_to_file(export_path)
            logger.info(f"Configuration exported to {export_path}")
            return True
        except OSError as e:
            logger.error(f"Failed to export configuration: {e}")
            return False

    def validate_config(self) -> Dict[str, Any]:
        """
        Validate the current configuration.

        Returns:
            Dictionary with 'valid', 'errors' and 'warnings'
        """
        config = self.config
        errors: List[str] = []
        warnings: List[str] = []

        try:
            config.validate()
        except ConfigurationError as e:
            errors.append(str(e))

        for model in config.models:
            train = model.train
            if not LR_RANGE[0] <= train.initial_lr <= LR_RANGE[1]:
                warnings.append(f"{model.name}: initial learning rate outside usual range: {train.initial_lr}")
            if not L2_RANGE[0] <= train.l2_penalty <= L2_RANGE[1]:
                warnings.append(f"{model.name}: L2 penalty outside usual range: {train.l2_penalty}")
            if model.strategy == Strategy.BATCH and not (
                FAST_MULTIPLIER_RANGE[0] <= model.batch_fast_lr_multiplier <= FAST_MULTIPLIER_RANGE[1]
            ):
                warnings.append(f"{model.name}: fast-weight multiplier outside usual range: "
                                f"{model.batch_fast_lr_multiplier}")
            if model.strategy == Strategy.MIMO and not (
                INPUT_REPETITION_RANGE[0] <= model.mimo_input_repetition <= INPUT_REPETITION_RANGE[1]
            ):
                warnings.append(f"{model.name}: input repetition outside usual range: "
                                f"{model.mimo_input_repetition}")

        if not any(m.strategy == Strategy.SINGLE for m in config.models):
            warnings.append("No single model in the roster; relative and weighted costs will be null")

        logger.debug(f"Configuration validation: {len(errors)} errors, {len(warnings)} warnings")
        return {'valid': not errors, 'errors': errors, 'warnings': warnings}

    def __str__(self) -> str:
        """String representation."""
        return f"ConfigurationManager(config_path={self.config_path}, loaded={self._loaded})"
