"""
Spark-to-wave experiment: from the stationary open fraction x*, the most
likely way for the channel population to reach x_target by time T, its
large-deviations exponent, and an optional Monte Carlo check of that exponent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from pdmp_ldp.analysis.confidence import add_confidence_columns, minus_log_p_slope
from pdmp_ldp.cache.sqlite_cache import SqliteCache
from pdmp_ldp.calcium.model import calcium_model, conserved_total
from pdmp_ldp.calcium.params import CalciumParams
from pdmp_ldp.errors import ConfigError, ExperimentError, PdmpError
from pdmp_ldp.ldp.rate import action_to_json
from pdmp_ldp.model.network import PDMPModel
from pdmp_ldp.optimal_path.hitting import HittingEstimate, hitting_exponent
from pdmp_ldp.optimal_path.shooting import ShootingSettings
from pdmp_ldp.simulate.ensemble import simulate_ensemble
from pdmp_ldp.simulate.events import EventPredicate, TerminalLevel
from pdmp_ldp.simulate.fluid import DEFAULT_RELAX_TIME, FixedPoint, fixed_point

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MonteCarloPlan:
    scales: Sequence[int] = ()
    trials: int = 10_000
    master_seed: int = 0
    workers: int = 1
    executor: str = "thread"

    @property
    def enabled(self) -> bool:
        return bool(self.scales) and self.trials > 0


@dataclass
class WaveReport:
    params: CalciumParams
    fixed_point: FixedPoint
    x_target: float
    T: float
    estimate: HittingEstimate
    reduced: bool = False
    monte_carlo: List[Dict[str, Any]] = field(default_factory=list)
    slope: Optional[Dict[str, Any]] = None
    ramp: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def J_star(self) -> float:
        return self.estimate.action

    @property
    def trajectory(self):
        return self.estimate.trajectory

    def to_dict(self) -> Dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "reduced": self.reduced,
            "fixed_point": self.fixed_point.to_dict(),
            "x_target": self.x_target,
            "T": self.T,
            "J_star": self.J_star,
            "exponent": self.estimate.exponent,
            "probability_estimate": self.estimate.probability,
            "optimal_path": self.trajectory.to_dict(),
            "monte_carlo": self.monte_carlo,
            "slope": self.slope,
            "ramp": self.ramp,
        }


def _stage(stage: str, exc: PdmpError) -> ExperimentError:
    return ExperimentError(f"{stage} stage failed: {exc}", stage=stage, cause=exc.to_dict())


def monte_carlo_rows(
    model: PDMPModel,
    T: float,
    x_target: float,
    plan: MonteCarloPlan,
    predicate: Optional[EventPredicate] = None,
) -> List[Dict[str, Any]]:
    """
    Empirical P(x(T) >= x_target) at each N of the plan, with confidence
    columns. A given predicate replaces the terminal-level event.
    """
    rows: List[Dict[str, Any]] = []
    predicate = predicate if predicate is not None else TerminalLevel(level=float(x_target))
    for i, scale in enumerate(plan.scales):
        sized = model.with_initial(scale=int(scale))
        report = simulate_ensemble(
            sized,
            T,
            plan.trials,
            plan.master_seed + i,
            predicate,
            workers=plan.workers,
            executor=plan.executor,
        )
        rows.append(
            {
                "N": int(scale),
                "trials": report.count,
                "hits": report.hits,
                "minus_logP_over_N": action_to_json(report.minus_log_p_over_n),
            }
        )
        logger.info("monte carlo N=%d: %d/%d hits", scale, report.hits, report.count)
    if not rows:
        return rows
    scored = add_confidence_columns(pd.DataFrame(rows))
    return [
        {**row, "confidence": c, "p_low": lo, "p_high": hi}
        for row, c, lo, hi in zip(rows, scored["confidence"], scored["p_low"], scored["p_high"])
    ]


def wave_transition_experiment(
    params: Optional[CalciumParams] = None,
    *,
    x_target: Optional[float] = None,
    reduced: bool = False,
    settings: Optional[ShootingSettings] = None,
    monte_carlo: Optional[MonteCarloPlan] = None,
    ramp: Sequence[float] = (),
    relax_time: float = DEFAULT_RELAX_TIME,
    cache: Optional[SqliteCache] = None,
) -> WaveReport:
    """
    fixed point -> optimal path to x_target -> hitting exponent -> optional
    Monte Carlo. The optimal path starts at the fixed point; the Monte Carlo
    ensembles start there too, snapped to the 1/N lattice.

    Args:
        x_target: overrides params.x_target.
        ramp: extra targets whose J* is reported alongside (same T).

    Raises:
        ConfigError: x_target lies below the fixed point.
        ExperimentError: a stage failed; `stage` is one of fixed_point,
            optimal_path, ramp, monte_carlo.
    """
    params = (params or CalciumParams()).validate()
    target = float(params.x_target if x_target is None else x_target)
    base = calcium_model(params, reduced=reduced)

    try:
        fp = fixed_point(base, relax_time=relax_time)
    except PdmpError as exc:
        raise _stage("fixed_point", exc) from exc
    x_star = float(fp.x[0])
    if target < x_star - 1e-9:
        raise ConfigError(
            f"x_target {target:g} lies below the fixed point x*={x_star:.6g}",
            keys=["model.params.x_target"],
        )
    model = base.with_initial(x0=fp.x, u0=fp.u)

    try:
        estimate = hitting_exponent(model, [target], params.T, settings=settings, cache=cache)
    except PdmpError as exc:
        raise _stage("optimal_path", exc) from exc

    ramp_rows: List[Dict[str, Any]] = []
    for level in ramp:
        try:
            ramp_estimate = hitting_exponent(model, [float(level)], params.T, settings=settings, cache=cache)
        except PdmpError as exc:
            raise _stage("ramp", exc) from exc
        ramp_rows.append({"x_target": float(level), "J_star": ramp_estimate.action})

    rows: List[Dict[str, Any]] = []
    slope = None
    if monte_carlo is not None and monte_carlo.enabled:
        try:
            rows = monte_carlo_rows(model, params.T, target, monte_carlo)
        except PdmpError as exc:
            raise _stage("monte_carlo", exc) from exc
        slope = minus_log_p_slope([r["N"] for r in rows], [r["hits"] for r in rows], [r["trials"] for r in rows])

    logger.info("wave transition: x*=%.6g -> %.6g over T=%g, J*=%.8g", x_star, target, params.T, estimate.action)
    return WaveReport(
        params=params,
        fixed_point=fp,
        x_target=target,
        T=params.T,
        estimate=estimate,
        reduced=reduced,
        monte_carlo=rows,
        slope=slope,
        ramp=ramp_rows,
    )


def relative_slope_error(report: WaveReport) -> Optional[float]:
    """|slope - J*| / J* for the Monte Carlo fit, or None without a usable fit."""
    if not report.slope or report.slope.get("slope") is None or report.J_star <= 0:
        return None
    return float(abs(report.slope["slope"] - report.J_star) / report.J_star)


def conserved_drift(report: WaveReport) -> float:
    """Largest deviation of gamma u1 + u2 from c_total along the optimal path (full model only)."""
    u = np.asarray(report.trajectory.u, dtype=float)
    if u.shape[1] < 2:
        return 0.0
    total = conserved_total(report.params, u)
    return float(np.max(np.abs(total - report.params.c_total)))
