from pathlib import Path

import pytest

from pdmp_ldp.config import AppConfig
from pdmp_ldp.errors import ConfigError

ENV_VARS = (
    "PDMP_OUTPUT_DIR",
    "PDMP_THREADS",
    "PDMP_EXECUTOR",
    "PDMP_CACHE_DB_PATH",
    "PDMP_CACHE_TTL_SECONDS",
    "PDMP_LOG_LEVEL",
)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    for name in ENV_VARS:
        monkeypatch.delenv(name, raising=False)


def test_defaults():
    cfg = AppConfig.load()
    assert cfg.output_dir == Path("runs")
    assert cfg.threads == 1
    assert cfg.executor == "thread"
    assert cfg.log_level == "INFO"
    assert cfg.cache_enabled
    assert cfg.cache().db_path == Path(".cache/pdmp_cache.sqlite")


def test_environment_overrides(monkeypatch, tmp_path):
    monkeypatch.setenv("PDMP_OUTPUT_DIR", str(tmp_path / "out"))
    monkeypatch.setenv("PDMP_THREADS", " 4 ")
    monkeypatch.setenv("PDMP_EXECUTOR", "Process")
    monkeypatch.setenv("PDMP_CACHE_TTL_SECONDS", "0")
    monkeypatch.setenv("PDMP_LOG_LEVEL", "debug")
    cfg = AppConfig.load()
    assert cfg.output_dir == tmp_path / "out"
    assert cfg.threads == 4
    assert cfg.executor == "process"
    assert cfg.log_level == "DEBUG"
    assert cfg.cache() is None


def test_invalid_values_are_listed_together(monkeypatch):
    monkeypatch.setenv("PDMP_THREADS", "0")
    monkeypatch.setenv("PDMP_EXECUTOR", "gpu")
    monkeypatch.setenv("PDMP_LOG_LEVEL", "loud")
    with pytest.raises(ConfigError) as err:
        AppConfig.load()
    assert err.value.keys == ["PDMP_THREADS", "PDMP_EXECUTOR", "PDMP_LOG_LEVEL"]


def test_non_integer_threads(monkeypatch):
    monkeypatch.setenv("PDMP_THREADS", "many")
    with pytest.raises(ConfigError) as err:
        AppConfig.load()
    assert err.value.keys == ["PDMP_THREADS"]


def test_ensure_local_dirs(monkeypatch, tmp_path):
    monkeypatch.setenv("PDMP_OUTPUT_DIR", str(tmp_path / "a" / "b"))
    monkeypatch.setenv("PDMP_CACHE_DB_PATH", str(tmp_path / "c" / "cache.sqlite"))
    cfg = AppConfig.load()
    cfg.ensure_local_dirs()
    assert (tmp_path / "a" / "b").is_dir()
    assert (tmp_path / "c").is_dir()
