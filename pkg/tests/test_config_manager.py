import json

import pytest

from pdmp_ldp.config_manager import ConfigManager, RunConfig, apply_overrides
from pdmp_ldp.errors import ConfigError


def test_empty_config_uses_defaults():
    config = RunConfig.from_dict({})
    assert config.model.name == "calcium"
    assert config.experiment.T is None
    assert config.experiment.rule == "trapezoid"
    assert config.solver.shooting.xdot_scales == (0.5, 1.0, 2.0)
    assert config.output.plot_data is True


def test_every_bad_key_is_reported():
    data = {
        "modle": {},
        "model": {"name": "lorenz"},
        "experiment": {"T": -1, "count": 0, "rule": "simpson", "colour": "red"},
        "solver": {"shooting": {"tolerance": 1e-6}},
    }
    with pytest.raises(ConfigError) as err:
        RunConfig.from_dict(data)
    assert err.value.keys == sorted(
        [
            "modle",
            "model.name",
            "experiment.T",
            "experiment.count",
            "experiment.rule",
            "experiment.colour",
            "solver.shooting.tolerance",
        ]
    )


def test_targets_accept_scalars_and_exclude_each_other():
    assert RunConfig.from_dict({"experiment": {"x_target": 0.9}}).experiment.x_target == [0.9]
    with pytest.raises(ConfigError) as err:
        RunConfig.from_dict({"experiment": {"x_target": [0.9], "z_target": [1.0]}})
    assert err.value.keys == ["experiment.z_target"]


def test_solver_sections_are_parsed():
    config = RunConfig.from_dict(
        {"solver": {"integrator": {"rtol": 1e-6}, "shooting": {"eta_offsets": [0.0], "output_intervals": 64}}}
    )
    assert config.solver.integrator.rtol == 1e-6
    assert config.solver.shooting.eta_offsets == (0.0,)
    assert config.solver.shooting.output_intervals == 64


def test_apply_overrides_parses_json_values():
    data = apply_overrides({"model": {"name": "calcium"}}, ["model.params.N=40", "experiment.scales=[20,40]", "output.dir=runs/x"])
    assert data["model"]["params"]["N"] == 40
    assert data["experiment"]["scales"] == [20, 40]
    assert data["output"]["dir"] == "runs/x"


def test_apply_overrides_rejects_malformed_items():
    with pytest.raises(ConfigError) as err:
        apply_overrides({"model": {"name": "calcium"}}, ["model.params.N", "model.name.x=1"])
    assert err.value.keys == ["model.params.N", "model.name.x"]


def test_manager_loads_and_saves(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"model": {"name": "calcium", "params": {"N": 50}}, "experiment": {"seed": 4}}))
    manager = ConfigManager(path)
    config = manager.load(["experiment.T=2.5"])
    assert config.model.params == {"N": 50}
    assert config.experiment.T == 2.5
    assert config.experiment.seed == 4

    config.experiment.seed = 9
    manager.save(config)
    assert ConfigManager(path).load().experiment.seed == 9
    copy = manager.save(config, tmp_path / "nested" / "copy.json")
    assert ConfigManager(copy).load().to_dict() == config.to_dict()
    assert RunConfig.from_dict(json.loads(path.read_text())).to_dict() == config.to_dict()


def test_manager_reports_invalid_json(tmp_path):
    path = tmp_path / "run.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        ConfigManager(path).load()
    assert ConfigManager(None).load().model.name == "calcium"
