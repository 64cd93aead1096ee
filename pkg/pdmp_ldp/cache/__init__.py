"""Local result cache."""

from pdmp_ldp.cache.sqlite_cache import SqliteCache, problem_key, sha256_key

__all__ = ["SqliteCache", "problem_key", "sha256_key"]
