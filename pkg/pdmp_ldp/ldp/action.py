"""
The action functional on piecewise-linear flux paths, and the rate function of
independent unit-rate Poisson processes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np

from pdmp_ldp.ldp.paths import SmoothPath
from pdmp_ldp.ldp.rate import INFINITE_ACTION, RATE_FLOOR, ActionValue, action_to_json, ell, flux_terms
from pdmp_ldp.model.network import PDMPModel

logger = logging.getLogger(__name__)

QUADRATURE_RULES = ("midpoint", "trapezoid")


@dataclass
class ActionResult:
    total: ActionValue
    per_reaction: List[ActionValue]
    # One record per (reaction, interval) with positive flux where the rate is at the floor.
    violations: List[Dict[str, Any]] = field(default_factory=list)
    drift_defect: float = 0.0
    rule: str = "trapezoid"

    @property
    def finite(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {
            "total": action_to_json(self.total),
            "per_reaction": [action_to_json(v) for v in self.per_reaction],
            "violations": self.violations,
            "drift_defect": self.drift_defect,
            "rule": self.rule,
        }


def _rates_at(model: PDMPModel, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.array([model.network.rates(xi, ui) for xi, ui in zip(x, u)])


def action(path: SmoothPath, model: PDMPModel, *, rule: str = "trapezoid") -> ActionResult:
    """
    J(z, x, u) = int_0^T sum_a lambda_a l(zdot_a / lambda_a) dt on a SmoothPath.

    zdot is the forward difference on each interval. With rule="midpoint" the
    integrand is evaluated at the interval midpoint state; with "trapezoid" it
    is averaged over the two endpoint states, and an interval where exactly
    one endpoint has a rate at the floor falls back to the midpoint. Both are
    second order. An interval where zdot_a > 0 while lambda_a is at the floor
    at both endpoints (or at the midpoint) is a forbidden interval and makes
    the action infinite.

    Raises:
        PathError: the path violates a SmoothPath invariant.
    """
    if rule not in QUADRATURE_RULES:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    net = model.network
    path.validate(net)
    zdot = np.maximum(path.zdot(), 0.0)
    dt = path.dt
    x_mid = 0.5 * (path.x[:-1] + path.x[1:])
    u_mid = 0.5 * (path.u[:-1] + path.u[1:])
    mid_rates = _rates_at(model, x_mid, u_mid)

    with np.errstate(invalid="ignore"):
        if rule == "midpoint":
            integrand = np.array([flux_terms(q, lam) for q, lam in zip(zdot, mid_rates)])
            node_rates = _rates_at(model, path.x, path.u)
            dead = (node_rates[:-1] <= RATE_FLOOR) & (node_rates[1:] <= RATE_FLOOR) & (zdot > 0)
            dead |= np.isinf(integrand)
        else:
            node_rates = _rates_at(model, path.x, path.u)
            left = np.array([flux_terms(q, lam) for q, lam in zip(zdot, node_rates[:-1])])
            right = np.array([flux_terms(q, lam) for q, lam in zip(zdot, node_rates[1:])])
            mid = np.array([flux_terms(q, lam) for q, lam in zip(zdot, mid_rates)])
            one_sided = np.isinf(left) ^ np.isinf(right)
            integrand = np.where(one_sided, mid, 0.5 * (left + right))
            dead = (np.isinf(left) & np.isinf(right)) | (one_sided & np.isinf(mid))

    violations: List[Dict[str, Any]] = []
    for i, a in zip(*np.nonzero(dead)):
        violations.append({"reaction": int(a), "interval": [float(path.t[i]), float(path.t[i + 1])]})

    per_reaction: List[ActionValue] = []
    for a in range(net.M):
        if np.any(dead[:, a]):
            per_reaction.append(INFINITE_ACTION)
        else:
            per_reaction.append(float(np.sum(integrand[:, a] * dt)))

    total: ActionValue = INFINITE_ACTION if violations else float(sum(per_reaction))
    defect = path.drift_defect(model)
    if violations:
        logger.debug("action infinite: %d forbidden intervals", len(violations))
    return ActionResult(total=total, per_reaction=per_reaction, violations=violations, drift_defect=defect, rule=rule)


def poisson_action(y: SmoothPath) -> float:
    """
    Rate function of M independent unit-rate Poisson processes,
    I(y) = sum_a int l(ydot_a) dt, with ydot from forward differences.

    Raises:
        ValueError: a component of y decreases.
    """
    ydot = y.zdot()
    if np.any(ydot < -1e-12):
        raise ValueError("Poisson paths must be nondecreasing")
    return float(np.sum(ell(np.maximum(ydot, 0.0)) * y.dt[:, None]))
