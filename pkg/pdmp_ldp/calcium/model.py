"""
The two-reaction channel model coupled to cytosolic and store calcium.

Reactions: closing, lambda_1 = alpha_close * x with xi = -1; opening,
lambda_2 = alpha_open * u1 * (1 - x) with xi = +1. The drift is

    A1 = k_f x (u2 - u1) - J_serca(u1) + k_leak (u2 - u1),   A2 = -gamma A1,

with J_serca(u1) = V_s u1^2 / (K_s^2 + u1^2). The reduced model drops u2
through u2 = c_total - gamma u1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Tuple, Union

import numpy as np

from pdmp_ldp.calcium.params import CalciumParams
from pdmp_ldp.model.network import PDMPModel, ReactionNetwork

logger = logging.getLogger(__name__)


def reduce_u2(params: CalciumParams, u1: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """u2 = c_total - gamma u1. A negative result is logged, not rejected."""
    u2 = params.c_total - params.gamma * np.asarray(u1, dtype=float)
    if np.any(u2 < 0):
        logger.warning("store calcium u2 is negative for u1=%s (c_total=%g, gamma=%g)", np.asarray(u1).tolist(), params.c_total, params.gamma)
    return float(u2) if u2.ndim == 0 else u2


def serca(params: CalciumParams, u1: float) -> float:
    return params.V_s * u1 * u1 / (params.K_s**2 + u1 * u1)


def serca_slope(params: CalciumParams, u1: float) -> float:
    ks2 = params.K_s**2
    return 2.0 * params.V_s * u1 * ks2 / (ks2 + u1 * u1) ** 2


@dataclass(frozen=True)
class ChannelClosing:
    alpha_close: float

    def __call__(self, x: np.ndarray, u: np.ndarray) -> float:
        return self.alpha_close * max(float(x[0]), 0.0)

    def gradient(self, x: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return np.array([self.alpha_close if x[0] > 0 else 0.0]), np.zeros(len(u))


@dataclass(frozen=True)
class ChannelOpening:
    alpha_open: float

    def __call__(self, x: np.ndarray, u: np.ndarray) -> float:
        return self.alpha_open * max(float(u[0]), 0.0) * max(1.0 - float(x[0]), 0.0)

    def gradient(self, x: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        u1 = max(float(u[0]), 0.0)
        closed = max(1.0 - float(x[0]), 0.0)
        gx = np.array([-self.alpha_open * u1 if x[0] < 1 else 0.0])
        gu = np.zeros(len(u))
        if u[0] > 0:
            gu[0] = self.alpha_open * closed
        return gx, gu


@dataclass(frozen=True)
class CalciumDrift:
    params: CalciumParams
    reduced: bool = False

    def _store(self, u: np.ndarray) -> float:
        return float(self.params.c_total - self.params.gamma * u[0]) if self.reduced else float(u[1])

    def flux(self, u: np.ndarray, x: np.ndarray) -> float:
        """A1, the net calcium flux into the cytosol."""
        p = self.params
        u1, u2 = float(u[0]), self._store(u)
        return p.k_f * float(x[0]) * (u2 - u1) - serca(p, u1) + p.k_leak * (u2 - u1)

    def __call__(self, u: np.ndarray, x: np.ndarray) -> np.ndarray:
        a1 = self.flux(u, x)
        if self.reduced:
            return np.array([a1])
        return np.array([a1, -self.params.gamma * a1])

    def jacobian(self, u: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        p = self.params
        u1, u2 = float(u[0]), self._store(u)
        xx = float(x[0])
        d_u1 = -p.k_f * xx - serca_slope(p, u1) - p.k_leak
        d_u2 = p.k_f * xx + p.k_leak
        d_x = p.k_f * (u2 - u1)
        if self.reduced:
            return np.array([[d_u1 - p.gamma * d_u2]]), np.array([[d_x]])
        g = p.gamma
        return (
            np.array([[d_u1, d_u2], [-g * d_u1, -g * d_u2]]),
            np.array([[d_x], [-g * d_x]]),
        )


def calcium_network(params: CalciumParams) -> ReactionNetwork:
    closing = ChannelClosing(params.alpha_close)
    opening = ChannelOpening(params.alpha_open)
    return ReactionNetwork(
        xi=np.array([[-1], [1]]),
        intensities=(closing, opening),
        rate_bound=params.rate_bound,
        intensity_gradients=(closing.gradient, opening.gradient),
        species=("open_fraction",),
        reactions=("close", "open"),
    )


def calcium_model(params: CalciumParams | None = None, *, reduced: bool = False, analytic: bool = True) -> PDMPModel:
    """
    PDMPModel for the calcium system at size params.N.

    With reduced=True the slow variable is u1 alone (m=1). The closed-form
    contracted Lagrangian is registered unless analytic=False.
    """
    from pdmp_ldp.calcium.lagrangian import CalciumLagrangian

    params = (params or CalciumParams()).validate()
    drift = CalciumDrift(params, reduced)
    u0 = [params.u1_0] if reduced else [params.u1_0, reduce_u2(params, params.u1_0)]
    return PDMPModel(
        network=calcium_network(params),
        drift=drift,
        m=1 if reduced else 2,
        u0=np.array(u0),
        x0=np.array([params.x0]),
        scale=params.N,
        drift_jacobian=drift.jacobian,
        lagrangian=CalciumLagrangian(params) if analytic else None,
        x_bounds=([1e-6], [1.0 - 1e-6]),
        name="calcium_reduced" if reduced else "calcium",
        metadata={"params": params.to_dict(), "reduced": reduced},
    )


def calcium_model_from_dict(data: Dict[str, Any]) -> PDMPModel:
    data = dict(data or {})
    reduced = bool(data.pop("reduced", False))
    return calcium_model(CalciumParams.from_dict(data), reduced=reduced)


def conserved_total(params: CalciumParams, u: np.ndarray) -> np.ndarray:
    """gamma u1 + u2 for each row of u (shape (n, 2))."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    return params.gamma * u[:, 0] + u[:, 1]
