import time

import pytest

from conftest import poisson_model
from pdmp_ldp.cache.sqlite_cache import SqliteCache, problem_key
from pdmp_ldp.optimal_path import hitting
from pdmp_ldp.optimal_path.hitting import cached_solve
from pdmp_ldp.optimal_path.shooting import ShootingProblem, ShootingSettings


def test_set_and_get(tmp_path):
    cache = SqliteCache(tmp_path / "cache.sqlite")
    assert cache.get("missing") is None
    cache.set("k", '{"a":1}', kind="test")
    assert cache.get("k") == '{"a":1}'


def test_zero_ttl_disables_the_cache(tmp_path):
    cache = SqliteCache(tmp_path / "cache.sqlite", ttl_seconds=0)
    assert not cache.enabled
    cache.set("k", "v")
    assert cache.get("k") is None
    assert not (tmp_path / "cache.sqlite").exists()


def test_entries_expire(tmp_path, monkeypatch):
    cache = SqliteCache(tmp_path / "cache.sqlite", ttl_seconds=60)
    cache.set("k", "v")
    now = time.time()
    monkeypatch.setattr(time, "time", lambda: now + 3600)
    assert cache.get("k") is None


def test_prune_removes_old_entries(tmp_path, monkeypatch):
    cache = SqliteCache(tmp_path / "cache.sqlite", ttl_seconds=60)
    cache.set("a", "1")
    cache.set("b", "2")
    now = time.time()
    monkeypatch.setattr(time, "time", lambda: now + 3600)
    assert cache.prune() == 2


def test_problem_key_is_canonical():
    assert problem_key("p", {"a": 1, "b": [1.0]}) == problem_key("p", {"b": [1.0], "a": 1})
    assert problem_key("p", {"a": 1}) != problem_key("q", {"a": 1})
    assert len(problem_key("p", {})) == 64


def test_cached_solve_reuses_a_stored_trajectory(tmp_path, monkeypatch):
    cache = SqliteCache(tmp_path / "cache.sqlite")
    settings = ShootingSettings(xdot_scales=(1.0,), eta_offsets=(0.0,), output_intervals=64)
    problem = ShootingProblem(model=poisson_model(), T=1.0, x_target=[2.0], settings=settings)
    first = cached_solve(problem, cache)

    def refuse(_problem):
        raise AssertionError("solver should not run on a cache hit")

    monkeypatch.setattr(hitting, "solve_bvp", refuse)
    again = cached_solve(problem, cache)
    assert again.action == first.action
    assert again.t.size == 65
    with pytest.raises(AssertionError):
        cached_solve(problem, None)
