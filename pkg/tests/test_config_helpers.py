import json

import pytest

from config import AppConfig, ensure_config_exists
from config_helpers import (
    get_coef_range,
    get_default_jobs,
    get_default_out_dir,
    get_latents_max,
    get_max_cond_size,
    get_record_wall_time,
    get_select_max,
    save_config_updates,
)


@pytest.fixture
def config_path(tmp_path, monkeypatch):
    path = tmp_path / "config.json"
    monkeypatch.setattr(AppConfig, "CONFIG_JSON", path)
    monkeypatch.delenv("CCI_OUT_DIR", raising=False)
    monkeypatch.delenv("CCI_JOBS", raising=False)
    return path


def test_defaults_without_config(config_path):
    assert get_default_jobs() == AppConfig.DEFAULT_JOBS
    assert get_max_cond_size() is None
    assert get_latents_max() == 3
    assert get_select_max() == 3
    assert get_coef_range() == (0.1, 1.0)
    assert get_record_wall_time() is False
    assert get_default_out_dir().endswith("cci_runs")


def test_init_writes_defaults_once(config_path):
    ensure_config_exists()
    assert json.loads(config_path.read_text(encoding="utf-8")) == AppConfig.DEFAULT_CONFIG
    save_config_updates({"jobs": 4})
    ensure_config_exists()
    assert get_default_jobs() == 4


def test_saved_values_are_read_back(config_path):
    save_config_updates({"max_cond_size": 2, "latents_max": 1, "coef_range": [0.2, 0.8], "record_wall_time": True})
    save_config_updates({"select_max": 0})
    assert get_max_cond_size() == 2
    assert get_latents_max() == 1
    assert get_select_max() == 0
    assert get_coef_range() == (0.2, 0.8)
    assert get_record_wall_time() is True


def test_malformed_values_fall_back(config_path):
    save_config_updates({"jobs": "many", "latents_max": -2, "coef_range": [0.9, 0.1], "max_cond_size": True})
    assert get_default_jobs() == AppConfig.DEFAULT_JOBS
    assert get_latents_max() == AppConfig.DEFAULT_LATENTS_MAX
    assert get_coef_range() == AppConfig.DEFAULT_COEF_RANGE
    assert get_max_cond_size() is None


def test_unreadable_config_is_ignored(config_path):
    config_path.write_text("{not json", encoding="utf-8")
    assert get_select_max() == AppConfig.DEFAULT_SELECT_MAX


def test_environment_wins(config_path, monkeypatch, tmp_path):
    save_config_updates({"jobs": 2, "out_dir": "from-config"})
    monkeypatch.setenv("CCI_JOBS", "6")
    monkeypatch.setenv("CCI_OUT_DIR", str(tmp_path / "env"))
    assert get_default_jobs() == 6
    assert get_default_out_dir() == str(tmp_path / "env")
