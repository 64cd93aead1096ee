import json
import sqlite3

import pytest

from conftest import poisson_params
from pdmp_ldp.cache.sqlite_cache import SqliteCache
from pdmp_ldp.calcium.model import calcium_model
from pdmp_ldp.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_SOLVER, main
from pdmp_ldp.simulate.fluid import fixed_point

QUICK_SHOOTING = [
    "--set",
    "solver.shooting.output_intervals=128",
    "--set",
    "solver.shooting.xdot_scales=[1.0]",
    "--set",
    "solver.shooting.eta_offsets=[0.0]",
]


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("PDMP_CACHE_TTL_SECONDS", "0")
    monkeypatch.setenv("PDMP_THREADS", "1")
    monkeypatch.setenv("PDMP_LOG_LEVEL", "WARNING")


def _read(path):
    return json.loads(path.read_text())


def _poisson_config(tmp_path, **experiment):
    path = tmp_path / "poisson.json"
    path.write_text(json.dumps({"model": {"name": "custom", "params": poisson_params()}, "experiment": experiment}))
    return path


def test_simulate_is_byte_identical_on_rerun(tmp_path):
    args = ["simulate", "--set", "model.params.N=50", "--set", "experiment.T=1.0", "--set", "experiment.seed=7"]
    assert main([*args, "--output-dir", str(tmp_path / "a")]) == EXIT_OK
    assert main([*args, "--output-dir", str(tmp_path / "b")]) == EXIT_OK
    for name in ("path.csv", "path.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    manifest = _read(tmp_path / "a" / "manifest.json")
    assert manifest["command"] == "simulate"
    assert manifest["seed"] == 7
    assert {e["path"] for e in manifest["files"]} == {"path.csv", "path.json"}


def test_simulate_ensemble_writes_plot_data(tmp_path):
    out = tmp_path / "ens"
    code = main(["simulate", "--output-dir", str(out), "--set", "model.params.N=20", "--set", "experiment.T=0.5", "--set", "experiment.count=4"])
    assert code == EXIT_OK
    assert _read(out / "ensemble.json")["count"] == 4
    assert (out / "plot_ensemble.csv").exists()


def test_action_of_the_deterministic_limit_is_small(tmp_path):
    out = tmp_path / "act"
    assert main(["action", "--output-dir", str(out), "--set", "experiment.T=2.0"]) == EXIT_OK
    report = _read(out / "action.json")
    assert report["source"] == "deterministic_limit"
    assert report["total"] < 1e-5


def test_optimal_path_for_a_custom_model(tmp_path):
    out = tmp_path / "opt"
    config = _poisson_config(tmp_path, T=1.0, x_target=[2.0])
    assert main(["optimal-path", "--config", str(config), "--output-dir", str(out), *QUICK_SHOOTING]) == EXIT_OK
    report = _read(out / "optimal_path.json")
    assert report["J_star"] == pytest.approx(0.3862943611, abs=1e-6)
    assert report["el_residual"] <= 1e-8
    assert (out / "trajectory.csv").exists()
    assert (out / "plot_trajectory.csv").exists()


def test_calcium_wave_at_the_fixed_point(tmp_path):
    out = tmp_path / "wave"
    x_star = float(fixed_point(calcium_model()).x[0])
    code = main(["calcium-wave", "--output-dir", str(out), "--set", f"experiment.x_target={x_star!r}", *QUICK_SHOOTING])
    assert code == EXIT_OK
    report = _read(out / "wave_report.json")
    assert report["J_star"] <= 1e-8
    assert report["trajectory_file"] == "trajectory.csv"


def test_validate_calcium(tmp_path):
    out = tmp_path / "val"
    assert main(["validate", "--output-dir", str(out), "--set", "experiment.samples=200"]) == EXIT_OK
    assert _read(out / "validation.json")["passed"] is True


def test_config_error_exit_code_and_error_file(tmp_path):
    out = tmp_path / "bad"
    assert main(["simulate", "--output-dir", str(out), "--set", "model.params.gama=1"]) == EXIT_CONFIG
    error = _read(out / "error.json")
    assert error["exit_code"] == EXIT_CONFIG
    assert error["error"] == "ConfigError"
    assert error["keys"] == ["model.params.gama"]


def test_unknown_config_key_is_a_config_error(tmp_path):
    out = tmp_path / "bad"
    assert main(["simulate", "--output-dir", str(out), "--set", "experiment.bogus=1"]) == EXIT_CONFIG
    assert _read(out / "error.json")["keys"] == ["experiment.bogus"]


def test_custom_validate_needs_a_box(tmp_path):
    out = tmp_path / "val"
    config = _poisson_config(tmp_path)
    assert main(["validate", "--config", str(config), "--output-dir", str(out)]) == EXIT_CONFIG
    assert _read(out / "error.json")["keys"] == ["experiment.box"]


def test_sweep_needs_scales(tmp_path):
    assert main(["sweep", "--output-dir", str(tmp_path / "sw")]) == EXIT_CONFIG


def test_solver_failure_exit_code(tmp_path):
    out = tmp_path / "fail"
    config = _poisson_config(tmp_path, T=1.0, x_target=[-1.0])
    code = main(["optimal-path", "--config", str(config), "--output-dir", str(out), "--set", "solver.shooting.max_iter=3"])
    assert code == EXIT_SOLVER
    error = _read(out / "error.json")
    assert error["error"] == "BVPError"
    assert len(error["starts"]) == 3


def test_missing_config_file_is_an_io_error(tmp_path):
    out = tmp_path / "io"
    assert main(["simulate", "--config", str(tmp_path / "nope.json"), "--output-dir", str(out)]) == EXIT_IO
    assert _read(out / "error.json")["exit_code"] == EXIT_IO


def test_run_prunes_expired_cache_entries_and_saves_the_config(tmp_path, monkeypatch):
    db = tmp_path / "cache" / "results.sqlite"
    monkeypatch.setenv("PDMP_CACHE_TTL_SECONDS", "60")
    monkeypatch.setenv("PDMP_CACHE_DB_PATH", str(db))
    cache = SqliteCache(db, ttl_seconds=60)
    cache.set("stale", "{}")
    cache.set("fresh", "{}")
    with sqlite3.connect(str(db)) as conn:
        conn.execute("UPDATE results SET created_at = 0 WHERE k = 'stale'")
        conn.commit()

    out = tmp_path / "deep" / "val"
    saved = tmp_path / "resolved.json"
    args = ["validate", "--output-dir", str(out), "--set", "experiment.samples=50", "--save-config", str(saved)]
    assert main(args) == EXIT_OK
    assert out.is_dir()
    with sqlite3.connect(str(db)) as conn:
        keys = [row[0] for row in conn.execute("SELECT k FROM results")]
    assert keys == ["fresh"]
    resolved = _read(saved)
    assert resolved["experiment"]["kind"] == "validate"
    assert resolved["experiment"]["samples"] == 50
