"""
Basic tests for the distributed average tracking simulator configuration.
"""

import pytest

# Local imports
from config.settings import (Config, DevelopmentConfig, ProductionConfig, TestingConfig,
                             get_config)
from core.errors import DatError, ExportError, GraphError, ScenarioError, SpectrumError


class TestConfiguration:
    """Test configuration functionality."""

    def test_get_config_default(self, monkeypatch):
        """Test that the development configuration is the default."""
        monkeypatch.delenv('DAT_ENV', raising=False)
        assert get_config() is DevelopmentConfig

    def test_get_config_testing(self, monkeypatch):
        """Test that DAT_ENV selects the configuration."""
        monkeypatch.setenv('DAT_ENV', 'testing')
        assert get_config() is TestingConfig

    def test_get_config_unknown(self, monkeypatch):
        """Test that an unknown environment falls back to the default."""
        monkeypatch.setenv('DAT_ENV', 'staging')
        assert get_config() is DevelopmentConfig

    def test_testing_config(self):
        """Test that testing configuration works."""
        config = TestingConfig
        assert config.SWEEP_WORKERS == 1
        assert config.LOG_LEVEL == 'DEBUG'
        assert issubclass(config, Config)

    def test_production_config(self):
        """Test that production logs warnings and above."""
        assert ProductionConfig.LOG_LEVEL == 'WARNING'


class TestValidateConfig:
    """Test configuration validation."""

    def setup_method(self):
        """Set up test fixtures."""
        self.base = TestingConfig

    def make(self, tmp_path, **overrides):
        attrs = {'OUTPUT_DIR': tmp_path / 'runs', 'LOGS_DIR': tmp_path / 'logs'}
        attrs.update(overrides)
        return type('Cfg', (self.base,), attrs)

    def test_valid_config(self, tmp_path):
        """Test that a valid configuration has no errors and creates its directories."""
        config = self.make(tmp_path)
        assert config.validate_config() == []
        assert (tmp_path / 'runs').is_dir()
        assert (tmp_path / 'logs').is_dir()

    @pytest.mark.parametrize('overrides, fragment', [
        ({'DEFAULT_STEP': 0.0}, 'DAT_STEP'),
        ({'DEFAULT_INTEGRATOR': 'midpoint'}, 'DAT_INTEGRATOR'),
        ({'RECORD_EVERY': 0}, 'DAT_RECORD_EVERY'),
        ({'DEFAULT_MARGIN': 1.0}, 'DAT_MARGIN'),
        ({'BOUND_SAFETY': 0.9}, 'DAT_BOUND_SAFETY'),
        ({'SWEEP_WORKERS': 0}, 'DAT_SWEEP_WORKERS'),
    ])
    def test_invalid_values(self, tmp_path, overrides, fragment):
        """Test that each invalid setting is reported."""
        errors = self.make(tmp_path, **overrides).validate_config()
        assert len(errors) == 1
        assert fragment in errors[0]


class TestErrorHierarchy:
    """Test that every simulator error shares one base class."""

    def test_common_base(self):
        for cls in (GraphError, ScenarioError, SpectrumError, ExportError):
            assert issubclass(cls, DatError)

    def test_scenario_error_location(self):
        error = ScenarioError("Invalid scenario: bad value", field='sim.step', line=7)
        assert "field 'sim.step'" in str(error)
        assert "line 7" in str(error)

    def test_spectrum_error_residual(self):
        error = SpectrumError("Eigen decomposition inaccurate", residual=1e-3)
        assert error.residual == 1e-3
        assert "residual=1.000e-03" in str(error)


if __name__ == "__main__":
    pytest.main([__file__])
