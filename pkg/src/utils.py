"""Utility functions for configuration and logging."""

import logging
import os
import yaml
from pathlib import Path
from typing import Any, Dict, Optional
from dotenv import load_dotenv

from .exceptions import ConfigError


def load_config(config_path: str = "config.yaml") -> Dict[str, Any]:
    """Load configuration from YAML (or JSON) file."""
    with open(config_path, 'r') as f:
        config = yaml.safe_load(f)
    if not isinstance(config, dict):
        raise ConfigError(f"Config file {config_path} does not contain a mapping")
    return config


def get_study_config(config: Dict[str, Any], study_name: Optional[str] = None) -> Dict[str, Any]:
    """
    Get configuration for a named study preset.

    Merges global config with study-specific settings.
    Study-specific settings override global ones.

    Args:
        config: Full configuration dictionary
        study_name: Name of the preset (e.g., 'ex1_tri_type2', 'ex2_voronoi_divfree').
                    If None, uses default_study from config.

    Returns:
        Merged configuration dictionary

    Raises:
        ConfigError: If study not found in config
    """
    if study_name is None:
        study_name = config.get('default_study')

    # Flat config without presets - return as is
    if 'studies' not in config or study_name is None:
        return {k: v for k, v in config.items() if k != 'studies'}

    if study_name not in config['studies']:
        available = list(config['studies'].keys())
        raise ConfigError(f"Study '{study_name}' not found. Available studies: {available}", key='study')

    merged = {k: v for k, v in config.items() if k not in ('studies', 'default_study')}
    merged.update(config['studies'][study_name])
    merged.setdefault('name', study_name)

    return merged


def list_available_studies(config: Dict[str, Any]) -> list:
    """
    List all study presets in config.

    Args:
        config: Configuration dictionary

    Returns:
        List of study names
    """
    if 'studies' not in config:
        return []
    return list(config['studies'].keys())


def setup_logging(log_level: str = "INFO", log_file: str = None) -> logging.Logger:
    """Configure logging for the application."""
    logger = logging.getLogger("polyvem")
    logger.setLevel(getattr(logging, log_level.upper()))

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    # Repeated CLI invocations in one process must not stack handlers
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def get_thread_count() -> int:
    """
    Resolve the worker count from POLYVEM_THREADS (0 or unset = auto).

    Returns:
        Number of worker threads (>= 1)
    """
    load_dotenv()
    raw = os.getenv('POLYVEM_THREADS', '0').strip() or '0'
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"POLYVEM_THREADS must be an integer, got '{raw}'", key='POLYVEM_THREADS')
    if threads < 0:
        raise ConfigError("POLYVEM_THREADS must be >= 0", key='POLYVEM_THREADS')
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def ensure_dir(path: str) -> Path:
    """Ensure directory exists."""
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
