"""Tests for user preferences."""

import json

from safe_admittance import config


def test_defaults_without_file(isolated_config):
    assert config.load_config() == config.DEFAULT_CONFIG


def test_save_then_load(isolated_config):
    config.save_config({"out_dir": "elsewhere", "jobs": 4, "channel": "sum"})
    loaded = config.load_config()
    assert loaded["out_dir"] == "elsewhere"
    assert loaded["jobs"] == 4
    assert json.loads((isolated_config / "config.json").read_text())["channel"] == "sum"


def test_partial_file_keeps_defaults(isolated_config):
    isolated_config.mkdir()
    (isolated_config / "config.json").write_text('{"jobs": 2}')
    loaded = config.load_config()
    assert loaded["jobs"] == 2
    assert loaded["channel"] == "1"


def test_corrupt_file_falls_back_to_defaults(isolated_config):
    isolated_config.mkdir()
    (isolated_config / "config.json").write_text("{not json")
    assert config.load_config() == config.DEFAULT_CONFIG


def test_environment_overrides_out_dir(isolated_config, monkeypatch):
    config.save_config({"out_dir": "from_file"})
    monkeypatch.setenv("SAFE_ADMITTANCE_OUT_DIR", "/tmp/from_env")
    assert config.load_config()["out_dir"] == "/tmp/from_env"
