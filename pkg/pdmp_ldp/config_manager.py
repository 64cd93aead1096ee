"""
Run configuration files.

A run is described by a JSON file with four sections:

    {
      "model": {"name": "calcium", "params": {"N": 1000}},
      "experiment": {"T": 10.0, "seed": 42, "count": 1},
      "solver": {"integrator": {"rtol": 1e-8}, "shooting": {"newton_tol": 1e-8}},
      "output": {"dir": "runs/demo", "plot_data": true}
    }

Unknown keys are rejected, and every offending key is reported in a single
ConfigError. Command-line overrides use dotted paths (model.params.N=40) with
values parsed as JSON where possible.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pdmp_ldp.errors import ConfigError
from pdmp_ldp.numerics.ode import DEFAULT_INTEGRATOR, IntegratorSettings
from pdmp_ldp.optimal_path.shooting import ShootingSettings

logger = logging.getLogger(__name__)

EXPERIMENT_KINDS = ("simulate", "action", "optimal-path", "calcium-wave", "sweep", "validate")
MODEL_NAMES = ("calcium", "custom")
QUADRATURE_RULES = ("midpoint", "trapezoid")

_SECTION_KEYS = {
    "model": {"name", "params"},
    "experiment": {
        "kind",
        "T",
        "seed",
        "count",
        "event",
        "scales",
        "trials",
        "x_target",
        "z_target",
        "path",
        "rule",
        "ramp",
        "collocation_nodes",
        "output_step",
        "relax_time",
        "reduced",
        "box",
        "samples",
    },
    "solver": {"integrator", "shooting"},
    "output": {"dir", "plot_data"},
}
_INTEGRATOR_KEYS = {"rtol", "atol", "methods", "max_step"}
_SHOOTING_KEYS = {
    "integrator",
    "newton_tol",
    "max_iter",
    "xdot_scales",
    "eta_offsets",
    "output_intervals",
    "workers",
    "segments",
    "collocation_seed",
}


@dataclass
class ModelSection:
    name: str = "calcium"
    params: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "params": self.params}


@dataclass
class ExperimentSection:
    kind: Optional[str] = None
    # None means the model's own horizon (calcium params.T) or 1.0.
    T: Optional[float] = None
    seed: int = 0
    count: int = 1
    event: Optional[Dict[str, Any]] = None
    scales: List[int] = field(default_factory=list)
    trials: int = 10_000
    x_target: Optional[List[float]] = None
    z_target: Optional[List[float]] = None
    path: Optional[str] = None
    rule: str = "trapezoid"
    ramp: List[float] = field(default_factory=list)
    collocation_nodes: int = 0
    output_step: Optional[float] = None
    relax_time: float = 50.0
    reduced: bool = False
    box: Optional[Dict[str, Any]] = None
    samples: int = 1000

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "T": self.T,
            "seed": self.seed,
            "count": self.count,
            "event": self.event,
            "scales": self.scales,
            "trials": self.trials,
            "x_target": self.x_target,
            "z_target": self.z_target,
            "path": self.path,
            "rule": self.rule,
            "ramp": self.ramp,
            "collocation_nodes": self.collocation_nodes,
            "output_step": self.output_step,
            "relax_time": self.relax_time,
            "reduced": self.reduced,
            "box": self.box,
            "samples": self.samples,
        }


@dataclass
class SolverSection:
    integrator: IntegratorSettings = DEFAULT_INTEGRATOR
    shooting: ShootingSettings = field(default_factory=ShootingSettings)

    def to_dict(self) -> Dict[str, Any]:
        return {"integrator": self.integrator.to_dict(), "shooting": self.shooting.to_dict()}


@dataclass
class OutputSection:
    dir: Optional[str] = None
    plot_data: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {"dir": self.dir, "plot_data": self.plot_data}


@dataclass
class RunConfig:
    model: ModelSection = field(default_factory=ModelSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    solver: SolverSection = field(default_factory=SolverSection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model.to_dict(),
            "experiment": self.experiment.to_dict(),
            "solver": self.solver.to_dict(),
            "output": self.output.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """Strict parse; raises ConfigError naming every unknown or invalid key."""
        bad: List[str] = []
        if not isinstance(data, dict):
            raise ConfigError("run config must be a JSON object", keys=["<root>"])
        bad += sorted(k for k in data if k not in _SECTION_KEYS)
        sections = {}
        for name, allowed in _SECTION_KEYS.items():
            block = data.get(name) or {}
            if not isinstance(block, dict):
                bad.append(name)
                block = {}
            bad += sorted(f"{name}.{k}" for k in block if k not in allowed)
            sections[name] = block

        model_block = sections["model"]
        model = ModelSection(name=str(model_block.get("name", "calcium")), params=dict(model_block.get("params") or {}))
        if model.name not in MODEL_NAMES:
            bad.append("model.name")

        exp = sections["experiment"]
        experiment = ExperimentSection()
        for key, convert in (
            ("kind", str),
            ("T", float),
            ("seed", int),
            ("count", int),
            ("trials", int),
            ("path", str),
            ("rule", str),
            ("collocation_nodes", int),
            ("output_step", float),
            ("relax_time", float),
            ("reduced", bool),
            ("samples", int),
        ):
            if exp.get(key) is None:
                continue
            try:
                setattr(experiment, key, convert(exp[key]))
            except (TypeError, ValueError):
                bad.append(f"experiment.{key}")
        for key, convert in (("scales", int), ("ramp", float), ("x_target", float), ("z_target", float)):
            if exp.get(key) is None:
                continue
            values = exp[key] if isinstance(exp[key], list) else [exp[key]]
            try:
                setattr(experiment, key, [convert(v) for v in values])
            except (TypeError, ValueError):
                bad.append(f"experiment.{key}")
        for key in ("event", "box"):
            if exp.get(key) is not None:
                if isinstance(exp[key], dict):
                    setattr(experiment, key, dict(exp[key]))
                else:
                    bad.append(f"experiment.{key}")

        if experiment.kind is not None and experiment.kind not in EXPERIMENT_KINDS:
            bad.append("experiment.kind")
        if experiment.T is not None and experiment.T <= 0:
            bad.append("experiment.T")
        if experiment.count < 1:
            bad.append("experiment.count")
        if experiment.trials < 1:
            bad.append("experiment.trials")
        if experiment.seed < 0:
            bad.append("experiment.seed")
        if any(n < 1 for n in experiment.scales):
            bad.append("experiment.scales")
        if experiment.rule not in QUADRATURE_RULES:
            bad.append("experiment.rule")
        if experiment.collocation_nodes < 0 or experiment.collocation_nodes == 1:
            bad.append("experiment.collocation_nodes")
        if experiment.output_step is not None and experiment.output_step <= 0:
            bad.append("experiment.output_step")
        if experiment.samples < 1:
            bad.append("experiment.samples")
        if experiment.x_target is not None and experiment.z_target is not None:
            bad.append("experiment.z_target")

        solver_block = sections["solver"]
        integrator_raw = solver_block.get("integrator") or {}
        shooting_raw = dict(solver_block.get("shooting") or {})
        bad += sorted(f"solver.integrator.{k}" for k in integrator_raw if k not in _INTEGRATOR_KEYS)
        bad += sorted(f"solver.shooting.{k}" for k in shooting_raw if k not in _SHOOTING_KEYS)
        bad += sorted(f"solver.shooting.integrator.{k}" for k in (shooting_raw.get("integrator") or {}) if k not in _INTEGRATOR_KEYS)
        solver = SolverSection()
        try:
            solver.integrator = IntegratorSettings.from_dict(integrator_raw)
            if solver.integrator.rtol <= 0 or solver.integrator.atol <= 0:
                bad.append("solver.integrator")
        except (TypeError, ValueError):
            bad.append("solver.integrator")
        try:
            solver.shooting = ShootingSettings.from_dict(shooting_raw)
            shooting = solver.shooting
            if (
                shooting.newton_tol <= 0
                or shooting.max_iter < 1
                or shooting.output_intervals < 2
                or shooting.segments < 1
                or shooting.collocation_seed < 0
            ):
                bad.append("solver.shooting")
        except (TypeError, ValueError):
            bad.append("solver.shooting")

        out = sections["output"]
        output = OutputSection(
            dir=None if out.get("dir") is None else str(out["dir"]),
            plot_data=bool(out.get("plot_data", True)),
        )

        if bad:
            raise ConfigError("invalid run configuration", keys=sorted(set(bad)))
        return cls(model=model, experiment=experiment, solver=solver, output=output)


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Set dotted keys (a.b.c=value) in a copy of `data`."""
    result = json.loads(json.dumps(data))
    bad: List[str] = []
    for item in overrides:
        if "=" not in item:
            bad.append(item)
            continue
        path, raw = item.split("=", 1)
        keys = [k for k in path.strip().split(".") if k]
        if not keys:
            bad.append(item)
            continue
        node = result
        for key in keys[:-1]:
            child = node.get(key)
            if child is None:
                child = node[key] = {}
            if not isinstance(child, dict):
                bad.append(path)
                break
            node = child
        else:
            node[keys[-1]] = _parse_value(raw.strip())
            logger.debug("override %s=%s", path, raw)
    if bad:
        raise ConfigError("malformed overrides (expected dotted.key=value)", keys=bad)
    return result


class ConfigManager:
    """Loads a RunConfig from a JSON file plus dotted overrides."""

    def __init__(self, config_path: Optional[Path] = None):
        self.config_path = Path(config_path) if config_path is not None else None
        self._raw: Optional[Dict[str, Any]] = None

    def raw(self) -> Dict[str, Any]:
        """
        The file contents as a dict; an absent path means an empty config.

        Raises:
            OSError: the file cannot be read.
            ConfigError: the file is not valid JSON.
        """
        if self._raw is not None:
            return self._raw
        if self.config_path is None:
            self._raw = {}
            return self._raw
        text = self.config_path.read_text(encoding="utf-8")
        try:
            self._raw = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{self.config_path} is not valid JSON: {exc.msg}", keys=[str(self.config_path)]) from exc
        return self._raw

    def load(self, overrides: Sequence[str] = ()) -> RunConfig:
        return RunConfig.from_dict(apply_overrides(self.raw(), overrides))

    def save(self, config: RunConfig, path: Optional[Path] = None) -> Path:
        target = Path(path) if path is not None else self.config_path
        if target is None:
            raise ValueError("no path to save the run config to")
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self._raw = config.to_dict()
        return target
