from __future__ import annotations

import hashlib
import logging
import sqlite3
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

from pdmp_ldp.export.artifacts import safe_json_dumps

logger = logging.getLogger(__name__)


def sha256_key(value: str) -> str:
    return hashlib.sha256(value.encode("utf-8")).hexdigest()


def problem_key(kind: str, payload: Dict[str, Any]) -> str:
    """Cache key for a solver result: hash of the kind plus the canonical JSON of its inputs."""
    return sha256_key(f"{kind}:{safe_json_dumps(payload)}")


@dataclass(frozen=True)
class SqliteCache:
    """Solved results stored as JSON text, expiring after a TTL."""

    db_path: Path
    ttl_seconds: int = 7 * 24 * 3600

    @property
    def enabled(self) -> bool:
        return self.ttl_seconds > 0

    def _connect(self) -> sqlite3.Connection:
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        conn = sqlite3.connect(str(self.db_path))
        conn.execute(
            """
            CREATE TABLE IF NOT EXISTS results (
              k TEXT PRIMARY KEY,
              kind TEXT NOT NULL,
              v TEXT NOT NULL,
              created_at INTEGER NOT NULL
            )
            """
        )
        conn.execute("CREATE INDEX IF NOT EXISTS idx_results_created ON results(created_at)")
        conn.commit()
        return conn

    def get(self, key: str) -> Optional[str]:
        if not self.enabled:
            return None
        cutoff = int(time.time()) - int(self.ttl_seconds)
        with self._connect() as conn:
            row = conn.execute("SELECT v, created_at FROM results WHERE k = ?", (key,)).fetchone()
            if not row:
                logger.debug("cache miss %s", key[:12])
                return None
            v, created_at = row
            if int(created_at) < cutoff:
                conn.execute("DELETE FROM results WHERE k = ?", (key,))
                conn.commit()
                logger.debug("cache entry %s expired", key[:12])
                return None
            logger.debug("cache hit %s", key[:12])
            return str(v)

    def set(self, key: str, value: str, *, kind: str = "result") -> None:
        if not self.enabled:
            return
        with self._connect() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO results(k, kind, v, created_at) VALUES(?, ?, ?, ?)",
                (key, kind, value, int(time.time())),
            )
            conn.commit()

    def prune(self, *, max_age_seconds: Optional[int] = None) -> int:
        age = self.ttl_seconds if max_age_seconds is None else max_age_seconds
        cutoff = int(time.time()) - max(int(age), 0)
        with self._connect() as conn:
            cur = conn.execute("DELETE FROM results WHERE created_at < ?", (cutoff,))
            conn.commit()
            return int(cur.rowcount or 0)
