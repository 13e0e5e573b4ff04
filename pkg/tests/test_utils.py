"""Tests for the utility functions."""

import numpy as np
import pytest
from additive_growth_py.types import NegativeRate, TableTooLarge
from additive_growth_py.utils import (
    Settings,
    all_configurations,
    check_table_size,
    encode,
    format_configuration,
    parse_assignments,
    validate_positive_int,
    validate_rate,
    wilson_interval,
)


def test_settings_from_env(monkeypatch):
    """Test that settings are read from the environment."""
    monkeypatch.setenv("GROWTH_SEED", "42")
    monkeypatch.setenv("GROWTH_THREADS", "0")
    monkeypatch.setenv("GROWTH_MAX_RATE", "50")
    settings = Settings.from_env()
    assert settings.seed == 42
    assert settings.threads == 1
    assert settings.max_rate == 50.0


def test_settings_invalid(monkeypatch):
    """Test that malformed environment values are reported."""
    monkeypatch.setenv("GROWTH_SEED", "abc")
    with pytest.raises(ValueError, match="GROWTH_SEED"):
        Settings.from_env()
    monkeypatch.setenv("GROWTH_SEED", "1")
    monkeypatch.setenv("GROWTH_MAX_RATE", "0")
    with pytest.raises(ValueError, match="GROWTH_MAX_RATE"):
        Settings.from_env()


def test_validate_rate():
    """Test the rate validator."""
    validate_rate(0.0)
    validate_rate(2.5)
    with pytest.raises(NegativeRate):
        validate_rate(-0.1)
    with pytest.raises(NegativeRate):
        validate_rate(float("inf"))


def test_validate_positive_int():
    """Test the count validator."""
    validate_positive_int(3, "N")
    with pytest.raises(ValueError):
        validate_positive_int(0, "N")
    with pytest.raises(ValueError):
        validate_positive_int(1.5, "N")


def test_check_table_size():
    """Test the table size limit."""
    assert check_table_size(3, 2) == 9
    with pytest.raises(TableTooLarge) as err:
        check_table_size(4, 11, limit=2**20)
    assert err.value.witness == (4, 11)


def test_configurations_in_code_order():
    """Test that configuration rows follow their mixed-radix codes."""
    configs = all_configurations(3, 2)
    assert configs.shape == (9, 2)
    assert configs[5].tolist() == [1, 2]
    assert encode(configs, 3).tolist() == list(range(9))
    assert encode([2, 0], 3) == 6
    assert all_configurations(2, 0).shape == (1, 0)


def test_wilson_interval():
    """Test the Wilson score interval."""
    low, high = wilson_interval(5, 10)
    assert low == pytest.approx(0.2366, abs=1e-3)
    assert high == pytest.approx(0.7634, abs=1e-3)
    assert wilson_interval(0, 0) == (0.0, 1.0)
    low, high = wilson_interval(10, 10)
    assert high == 1.0
    assert low < 1.0


def test_format_configuration():
    """Test sparse and dense configuration strings."""
    labels = ["0", "1", "2"]
    assert format_configuration(np.array([0, 2, 0, 0]), labels) == "s:1=2"
    assert format_configuration(np.array([1, 2, 0]), labels) == "d:1 2 0"
    assert format_configuration(np.zeros(3, dtype=int)) == "s:"


def test_parse_assignments():
    """Test command-line parameter parsing."""
    assert parse_assignments(["lambda=1.5", " gamma =2"]) == {"lambda": 1.5, "gamma": 2.0}
    assert parse_assignments(None) == {}
    with pytest.raises(ValueError):
        parse_assignments(["lambda"])
    with pytest.raises(ValueError):
        parse_assignments(["lambda=fast"])
