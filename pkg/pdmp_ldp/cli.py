"""
Batch front-end.

    python -m pdmp_ldp simulate --config run.json --set model.params.N=1000
    python -m pdmp_ldp calcium-wave --set experiment.scales=[20,40,80]

Every run writes its artifacts plus manifest.json into the output directory.
Exit codes: 0 success, 2 configuration error, 3 solver or model failure,
4 I/O error; on failure error.json describes what went wrong.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence

import pandas as pd

from pdmp_ldp.analysis.confidence import minus_log_p_slope
from pdmp_ldp.calcium.experiment import MonteCarloPlan, monte_carlo_rows, wave_transition_experiment
from pdmp_ldp.calcium.params import CalciumParams
from pdmp_ldp.config import AppConfig, configure_logging
from pdmp_ldp.config_manager import EXPERIMENT_KINDS, ConfigManager, RunConfig
from pdmp_ldp.errors import ConfigError, ModelError, PdmpError
from pdmp_ldp.export.artifacts import ArtifactWriter, safe_json_dumps
from pdmp_ldp.export.plot_data import emit_plot_data
from pdmp_ldp.ldp.action import action
from pdmp_ldp.ldp.paths import SmoothPath, sample_fluid
from pdmp_ldp.model.network import PDMPModel
from pdmp_ldp.model.registry import build_model
from pdmp_ldp.model.validation import SamplingBox, validate_network
from pdmp_ldp.optimal_path.collocation import collocation_minimize
from pdmp_ldp.optimal_path.euler_lagrange import el_residual
from pdmp_ldp.optimal_path.hitting import hitting_exponent
from pdmp_ldp.optimal_path.shooting import ShootingProblem
from pdmp_ldp.simulate.ensemble import simulate_ensemble
from pdmp_ldp.simulate.events import FluxAtLeast, predicate_from_dict
from pdmp_ldp.simulate.fluid import deterministic_limit
from pdmp_ldp.simulate.pdmp import simulate_pdmp

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

ACTION_INTERVALS = 512


class RunContext:
    """Resolved settings shared by the subcommand runners."""

    def __init__(self, command: str, config: RunConfig, app: AppConfig, writer: ArtifactWriter, threads: int):
        self.command = command
        self.config = config
        self.app = app
        self.writer = writer
        self.threads = threads
        self.cache = app.cache()
        if self.cache is not None:
            removed = self.cache.prune()
            if removed:
                logger.info("pruned %d expired cache entries", removed)

    @property
    def experiment(self):
        return self.config.experiment

    @property
    def shooting(self):
        return replace(self.config.solver.shooting, workers=self.threads)

    def model(self) -> PDMPModel:
        params = dict(self.config.model.params)
        if self.config.model.name == "calcium" and self.experiment.reduced:
            params["reduced"] = True
        return build_model(self.config.model.name, params)

    def horizon(self, model: PDMPModel) -> float:
        if self.experiment.T is not None:
            return float(self.experiment.T)
        return float(model.metadata.get("params", {}).get("T", 1.0))

    def calcium_params(self) -> CalciumParams:
        if self.config.model.name != "calcium":
            raise ConfigError(f"{self.command} needs the calcium model", keys=["model.name"])
        params = dict(self.config.model.params)
        params.pop("reduced", None)
        if self.experiment.T is not None:
            params["T"] = self.experiment.T
        return CalciumParams.from_dict(params)


def _targets(ctx: RunContext, model: PDMPModel) -> Dict[str, Any]:
    exp = ctx.experiment
    if exp.x_target is not None:
        return {"x_target": exp.x_target}
    if exp.z_target is not None:
        return {"z_target": exp.z_target}
    if model.name.startswith("calcium"):
        return {"x_target": [model.metadata["params"]["x_target"]]}
    raise ConfigError("set experiment.x_target or experiment.z_target", keys=["experiment.x_target"])


def run_simulate(ctx: RunContext) -> Dict[str, Any]:
    model = ctx.model()
    T = ctx.horizon(model)
    exp = ctx.experiment
    integrator = ctx.config.solver.integrator
    if exp.count == 1:
        path = simulate_pdmp(model, T, exp.seed, settings=integrator, output_step=exp.output_step)
        ctx.writer.write_csv("path.csv", path.to_frame())
        report = path.to_dict()
        ctx.writer.write_json("path.json", report)
        return report

    predicate = predicate_from_dict(exp.event, model.network.xi) if exp.event else None
    ensemble = simulate_ensemble(
        model,
        T,
        exp.count,
        exp.seed,
        predicate,
        workers=ctx.threads,
        executor=ctx.app.executor,
        settings=integrator,
        output_step=exp.output_step,
    )
    ctx.writer.write_json("ensemble.json", ensemble.to_dict())
    if ctx.config.output.plot_data:
        emit_plot_data(ensemble, ctx.writer)
    return ensemble.to_dict()


def run_action(ctx: RunContext) -> Dict[str, Any]:
    model = ctx.model()
    exp = ctx.experiment
    if exp.path:
        path = SmoothPath.from_frame(pd.read_csv(exp.path))
        source = exp.path
    else:
        T = ctx.horizon(model)
        path = sample_fluid(deterministic_limit(model, T, settings=ctx.config.solver.integrator), T, ACTION_INTERVALS)
        source = "deterministic_limit"
    result = action(path, model, rule=exp.rule)
    report = {"source": source, **result.to_dict()}
    ctx.writer.write_json("action.json", report)
    return report


def run_optimal_path(ctx: RunContext) -> Dict[str, Any]:
    model = ctx.model()
    T = ctx.horizon(model)
    estimate = hitting_exponent(model, T=T, settings=ctx.shooting, cache=ctx.cache, **_targets(ctx, model))
    trajectory = estimate.trajectory
    report = estimate.to_dict()
    if trajectory.form == "contracted":
        report["el_residual"] = el_residual(trajectory, model)
    ctx.writer.write_csv("trajectory.csv", trajectory.to_frame())
    report["trajectory_file"] = "trajectory.csv"

    nodes = ctx.experiment.collocation_nodes
    if nodes:
        problem = ShootingProblem(model=model, T=T, settings=ctx.shooting, **_targets(ctx, model))
        colloc = collocation_minimize(problem, nodes)
        report["collocation"] = colloc.to_dict()
        if estimate.action > 0:
            report["collocation"]["relative_gap"] = abs(colloc.action - estimate.action) / estimate.action
        ctx.writer.write_csv("collocation.csv", colloc.to_frame())

    ctx.writer.write_json("optimal_path.json", report)
    if ctx.config.output.plot_data:
        emit_plot_data(trajectory, ctx.writer)
    return report


def _monte_carlo_plan(ctx: RunContext) -> MonteCarloPlan:
    exp = ctx.experiment
    return MonteCarloPlan(
        scales=tuple(exp.scales),
        trials=exp.trials,
        master_seed=exp.seed,
        workers=ctx.threads,
        executor=ctx.app.executor,
    )


def _wave(ctx: RunContext, plan: Optional[MonteCarloPlan]) -> Dict[str, Any]:
    exp = ctx.experiment
    report = wave_transition_experiment(
        ctx.calcium_params(),
        x_target=exp.x_target[0] if exp.x_target else None,
        reduced=exp.reduced,
        settings=ctx.shooting,
        monte_carlo=plan,
        ramp=exp.ramp,
        relax_time=exp.relax_time,
        cache=ctx.cache,
    )
    ctx.writer.write_csv("trajectory.csv", report.trajectory.to_frame())
    out = report.to_dict()
    out["trajectory_file"] = "trajectory.csv"
    ctx.writer.write_json("wave_report.json", out)
    if ctx.config.output.plot_data:
        emit_plot_data({"monte_carlo": report.monte_carlo, "J_star": report.J_star, "trajectory": report.trajectory}, ctx.writer)
    return out


def run_calcium_wave(ctx: RunContext) -> Dict[str, Any]:
    plan = _monte_carlo_plan(ctx)
    return _wave(ctx, plan if plan.enabled else None)


def run_sweep(ctx: RunContext) -> Dict[str, Any]:
    plan = _monte_carlo_plan(ctx)
    if not plan.enabled:
        raise ConfigError("sweep needs experiment.scales", keys=["experiment.scales"])
    if ctx.config.model.name == "calcium":
        return _wave(ctx, plan)

    model = ctx.model()
    T = ctx.horizon(model)
    targets = _targets(ctx, model)
    estimate = hitting_exponent(model, T=T, settings=ctx.shooting, cache=ctx.cache, **targets)
    exp = ctx.experiment
    if exp.event:
        predicate = predicate_from_dict(exp.event, model.network.xi)
    elif "z_target" in targets:
        predicate = FluxAtLeast(float(targets["z_target"][0]), 0)
    else:
        predicate = None
    x_level = float(targets["x_target"][0]) if "x_target" in targets else 0.0
    rows = monte_carlo_rows(model, T, x_level, plan, predicate)
    out = {
        "J_star": estimate.action,
        "monte_carlo": rows,
        "slope": minus_log_p_slope([r["N"] for r in rows], [r["hits"] for r in rows], [r["trials"] for r in rows]),
        "optimal_path": estimate.trajectory.to_dict(),
    }
    ctx.writer.write_json("sweep_report.json", out)
    if ctx.config.output.plot_data:
        emit_plot_data({"monte_carlo": rows, "J_star": estimate.action}, ctx.writer)
    return out


def _default_box(ctx: RunContext, model: PDMPModel) -> SamplingBox:
    if ctx.experiment.box:
        return SamplingBox.from_dict(ctx.experiment.box)
    if not model.name.startswith("calcium"):
        raise ConfigError("validate needs experiment.box for a custom model", keys=["experiment.box"])
    params = ctx.calcium_params()
    u_high = [params.c_total / params.gamma] + ([] if model.m == 1 else [params.c_total])
    return SamplingBox(x_low=[0.0], x_high=[1.0], u_low=[0.0] * model.m, u_high=u_high)


def run_validate(ctx: RunContext) -> Dict[str, Any]:
    model = ctx.model()
    report = validate_network(model.network, _default_box(ctx, model), ctx.experiment.samples, seed=ctx.experiment.seed)
    ctx.writer.write_json("validation.json", report.to_dict())
    if not report.passed:
        raise ModelError("network validation failed", report=report.to_dict())
    return report.to_dict()


RUNNERS: Dict[str, Callable[[RunContext], Dict[str, Any]]] = {
    "simulate": run_simulate,
    "action": run_action,
    "optimal-path": run_optimal_path,
    "calcium-wave": run_calcium_wave,
    "sweep": run_sweep,
    "validate": run_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="JSON run config")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key by dotted path (repeatable)",
    )
    common.add_argument("--threads", type=int, default=None, help="worker-pool size (default PDMP_THREADS)")
    common.add_argument("--output-dir", type=Path, default=None, help="artifact directory (default PDMP_OUTPUT_DIR)")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default PDMP_LOG_LEVEL)")
    common.add_argument("--save-config", type=Path, default=None, help="also write the resolved run config to this file")

    parser = argparse.ArgumentParser(prog="pdmp-ldp", description="PDMP simulation and large-deviations paths")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "simulate one path or an ensemble",
        "action": "evaluate the action of a path CSV",
        "optimal-path": "solve the Euler-Lagrange boundary-value problem",
        "calcium-wave": "spark-to-wave experiment on the calcium model",
        "sweep": "Monte Carlo exponent check over several N",
        "validate": "spot-check rate bounds and positivity guards",
    }
    for name in EXPERIMENT_KINDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _write_error(output_dir: Optional[Path], payload: Dict[str, Any]) -> None:
    if output_dir is None:
        return
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        (output_dir / "error.json").write_text(safe_json_dumps(payload, indent=2) + "\n", encoding="utf-8")
    except OSError:
        logger.exception("could not write error.json to %s", output_dir)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command
    output_dir: Optional[Path] = args.output_dir

    try:
        app = AppConfig.load()
        configure_logging(args.log_level or app.log_level)
        manager = ConfigManager(args.config)
        config = manager.load([*args.overrides, f"experiment.kind={command}"])
        if args.save_config is not None:
            manager.save(config, args.save_config)
        if output_dir is None:
            output_dir = Path(config.output.dir) if config.output.dir else app.output_dir
        threads = args.threads if args.threads is not None else app.threads
        if threads < 1:
            raise ConfigError("--threads must be >= 1", keys=["--threads"])

        app.ensure_local_dirs(output_dir)
        writer = ArtifactWriter(output_dir)
        ctx = RunContext(command, config, app, writer, threads)
        RUNNERS[command](ctx)
        writer.write_manifest(config=config.to_dict(), seed=config.experiment.seed, command=command)
    except ConfigError as exc:
        logger.error("configuration error: %s (keys: %s)", exc, ", ".join(exc.keys))
        _write_error(output_dir, {"exit_code": EXIT_CONFIG, **exc.to_dict()})
        return EXIT_CONFIG
    except PdmpError as exc:
        logger.error("%s failed: %s", command, exc)
        _write_error(output_dir, {"exit_code": EXIT_SOLVER, **exc.to_dict()})
        return EXIT_SOLVER
    except ValueError as exc:
        logger.error("invalid input: %s", exc)
        _write_error(output_dir, {"exit_code": EXIT_CONFIG, "error": "ValueError", "message": str(exc)})
        return EXIT_CONFIG
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        _write_error(output_dir, {"exit_code": EXIT_IO, "error": type(exc).__name__, "message": str(exc)})
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
