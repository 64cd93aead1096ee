from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

from pdmp_ldp.cache.sqlite_cache import SqliteCache
from pdmp_ldp.errors import ConfigError

EXECUTORS = ("thread", "process")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def _path_from_env(value: str | None) -> Path | None:
    if not value:
        return None
    return Path(value).expanduser()


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer", keys=[name]) from exc


@dataclass(frozen=True)
class AppConfig:
    output_dir: Path
    threads: int
    executor: str

    # Cache configuration
    cache_db_path: Path
    cache_ttl_seconds: int

    log_level: str

    @staticmethod
    def load() -> "AppConfig":
        load_dotenv(override=False)

        output_dir = _path_from_env(os.getenv("PDMP_OUTPUT_DIR")) or Path("runs")
        threads = _int_env("PDMP_THREADS", 1)
        executor = os.getenv("PDMP_EXECUTOR", "thread").strip().lower()

        cache_db_path = _path_from_env(os.getenv("PDMP_CACHE_DB_PATH")) or Path(".cache/pdmp_cache.sqlite")
        cache_ttl_seconds = _int_env("PDMP_CACHE_TTL_SECONDS", 7 * 24 * 3600)

        log_level = os.getenv("PDMP_LOG_LEVEL", "INFO").strip().upper()

        cfg = AppConfig(
            output_dir=output_dir,
            threads=threads,
            executor=executor,
            cache_db_path=cache_db_path,
            cache_ttl_seconds=cache_ttl_seconds,
            log_level=log_level,
        )
        cfg._validate()
        return cfg

    def _validate(self) -> None:
        bad = []
        if self.threads < 1:
            bad.append("PDMP_THREADS")
        if self.executor not in EXECUTORS:
            bad.append("PDMP_EXECUTOR")
        if self.cache_ttl_seconds < 0:
            bad.append("PDMP_CACHE_TTL_SECONDS")
        if self.log_level not in LOG_LEVELS:
            bad.append("PDMP_LOG_LEVEL")
        if bad:
            raise ConfigError("invalid environment configuration", keys=bad)

    def ensure_local_dirs(self, output_dir: Path | None = None) -> None:
        """Create the artifact directory (output_dir, else PDMP_OUTPUT_DIR) and the cache directory."""
        (output_dir or self.output_dir).mkdir(parents=True, exist_ok=True)
        if self.cache_enabled:
            self.cache_db_path.parent.mkdir(parents=True, exist_ok=True)

    @property
    def cache_enabled(self) -> bool:
        return self.cache_ttl_seconds > 0

    def cache(self) -> SqliteCache | None:
        if not self.cache_enabled:
            return None
        return SqliteCache(self.cache_db_path, ttl_seconds=self.cache_ttl_seconds)


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
