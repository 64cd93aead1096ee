from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from pdmp_ldp.cache.sqlite_cache import SqliteCache, problem_key
from pdmp_ldp.export.artifacts import safe_json_dumps
from pdmp_ldp.model.network import PDMPModel
from pdmp_ldp.optimal_path.shooting import OptimalTrajectory, ShootingProblem, ShootingSettings, solve_bvp

logger = logging.getLogger(__name__)


@dataclass
class HittingEstimate:
    """Large-deviations estimate P ~ exp(-N J*) for reaching a target at time T."""

    action: float
    scale: int
    trajectory: OptimalTrajectory

    @property
    def exponent(self) -> float:
        return self.scale * self.action

    @property
    def probability(self) -> float:
        return float(np.exp(-self.exponent))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "J_star": self.action,
            "N": self.scale,
            "exponent": self.exponent,
            "probability_estimate": self.probability,
            "trajectory": self.trajectory.to_dict(),
        }


def cached_solve(problem: ShootingProblem, cache: Optional[SqliteCache] = None) -> OptimalTrajectory:
    """solve_bvp, reusing a stored trajectory for an identical problem."""
    if cache is None or not cache.enabled:
        return solve_bvp(problem)
    key = problem_key("optimal_path", problem.to_dict())
    stored = cache.get(key)
    if stored is not None:
        return OptimalTrajectory.from_record(json.loads(stored))
    trajectory = solve_bvp(problem)
    cache.set(key, safe_json_dumps(trajectory.to_record()), kind="optimal_path")
    return trajectory


def hitting_exponent(
    model: PDMPModel,
    x_target: Optional[Any] = None,
    T: float = 1.0,
    *,
    z_target: Optional[Any] = None,
    settings: Optional[ShootingSettings] = None,
    cache: Optional[SqliteCache] = None,
) -> HittingEstimate:
    """
    Solve the fixed-horizon problem to x_target (or z_target in flux form)
    and report J*, N J* and exp(-N J*) at the model's scale N.

    Raises:
        BVPError: no shooting start converged.
    """
    problem = ShootingProblem(
        model=model,
        T=T,
        x_target=x_target,
        z_target=z_target,
        settings=settings or ShootingSettings(),
    )
    trajectory = cached_solve(problem, cache)
    estimate = HittingEstimate(action=trajectory.action, scale=model.scale, trajectory=trajectory)
    logger.info("hitting exponent: J*=%.10g, N J*=%.6g", estimate.action, estimate.exponent)
    return estimate
