"""
Configuration settings for the distributed average tracking simulator.
This module contains all application settings and environment variables.
"""

import os
from pathlib import Path
from typing import List
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Base directory
BASE_DIR = Path(__file__).parent.parent


class Config:
    """Base configuration class with all application settings."""

    # Environment
    DAT_ENV = os.getenv('DAT_ENV', 'development')

    # Output Settings
    OUTPUT_DIR = Path(os.getenv('DAT_OUTPUT_DIR', str(BASE_DIR / 'runs')))
    LOGS_DIR = Path(os.getenv('DAT_LOGS_DIR', str(BASE_DIR / 'logs')))

    # Logging Settings
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOG_FILE = os.getenv('LOG_FILE', 'dat.log')
    LOG_JSON = os.getenv('LOG_JSON', 'False').lower() == 'true'

    # Simulation Settings
    DEFAULT_STEP = float(os.getenv('DAT_STEP', 1e-3))
    DEFAULT_INTEGRATOR = os.getenv('DAT_INTEGRATOR', 'rk4')
    RECORD_EVERY = int(os.getenv('DAT_RECORD_EVERY', 10))
    DIVERGENCE_CAP = float(os.getenv('DAT_DIVERGENCE_CAP', 1e6))

    # Gain Synthesis Settings
    DEFAULT_MARGIN = float(os.getenv('DAT_MARGIN', 1.1))
    BOUND_SAFETY = float(os.getenv('DAT_BOUND_SAFETY', 1.1))
    BOUND_GRID_STEP = float(os.getenv('DAT_BOUND_GRID_STEP', 1e-3))

    # Spectral Settings
    EIGEN_TOL = float(os.getenv('DAT_EIGEN_TOL', 1e-10))
    ZERO_EIGEN_TOL = float(os.getenv('DAT_ZERO_EIGEN_TOL', 1e-8))

    # Sweep Settings
    SWEEP_WORKERS = int(os.getenv('DAT_SWEEP_WORKERS', 2))

    @classmethod
    def create_directories(cls) -> None:
        """Create necessary directories if they don't exist."""
        directories = [cls.OUTPUT_DIR, cls.LOGS_DIR]
        for directory in directories:
            directory.mkdir(parents=True, exist_ok=True)

    @classmethod
    def validate_config(cls) -> List[str]:
        """Validate configuration and return list of errors."""
        errors = []

        if cls.DEFAULT_STEP <= 0:
            errors.append("DAT_STEP must be positive")

        if cls.DEFAULT_INTEGRATOR not in ('euler', 'rk4'):
            errors.append("DAT_INTEGRATOR must be 'euler' or 'rk4'")

        if cls.RECORD_EVERY < 1:
            errors.append("DAT_RECORD_EVERY must be at least 1")

        if cls.DEFAULT_MARGIN <= 1:
            errors.append("DAT_MARGIN must be greater than 1")

        if cls.BOUND_SAFETY < 1:
            errors.append("DAT_BOUND_SAFETY must be at least 1")

        if cls.SWEEP_WORKERS < 1:
            errors.append("DAT_SWEEP_WORKERS must be at least 1")

        # Check if directories are writable
        try:
            cls.create_directories()
        except PermissionError:
            errors.append("Cannot create required directories - check permissions")

        return errors


class DevelopmentConfig(Config):
    """Development configuration."""


class ProductionConfig(Config):
    """Production configuration."""

    # Override with production settings
    LOG_LEVEL = 'WARNING'


class TestingConfig(Config):
    """Testing configuration."""
    LOG_LEVEL = 'DEBUG'
    RECORD_EVERY = 50
    SWEEP_WORKERS = 1


# Configuration mapping
config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}


def get_config() -> Config:
    """Get configuration based on environment."""
    env = os.getenv('DAT_ENV', 'development')
    return config.get(env, config['default'])
