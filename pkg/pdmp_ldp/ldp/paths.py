"""
Piecewise-linear flux paths on a uniform grid.

A SmoothPath stores node values of (z, x, u); z is linear between nodes so
zdot is constant on each interval. x is tied to z by x = x0 + sum z_alpha
xi_alpha; u is expected to follow the slow ODE and its defect is reported
rather than enforced.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional

import numpy as np
import pandas as pd

from pdmp_ldp.errors import IntegrationError, ModelError, PathError
from pdmp_ldp.export.csv_export import frame_block, trajectory_frame
from pdmp_ldp.model.network import PDMPModel, ReactionNetwork
from pdmp_ldp.numerics.arrays import as_columns
from pdmp_ldp.numerics.ode import DEFAULT_INTEGRATOR, IntegratorSettings, integrate

IDENTITY_TOL = 1e-10
MONOTONE_TOL = 1e-12
GRID_TOL = 1e-9


@dataclass
class SmoothPath:
    t: np.ndarray
    z: np.ndarray
    x: np.ndarray
    u: np.ndarray

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=float)
        n = self.t.size
        self.z = as_columns(self.z, n)
        self.x = as_columns(self.x, n)
        self.u = as_columns(self.u, n)

    @property
    def nodes(self) -> int:
        return int(self.t.size)

    @property
    def horizon(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.t)

    def zdot(self) -> np.ndarray:
        """Forward differences, shape (n_intervals, M)."""
        return np.diff(self.z, axis=0) / self.dt[:, None]

    def xdot(self) -> np.ndarray:
        return np.diff(self.x, axis=0) / self.dt[:, None]

    def validate(self, net: ReactionNetwork) -> None:
        """
        Raises:
            PathError: non-uniform or non-increasing grid, a node where
                x != x0 + sum (z - z0) xi beyond 1e-10, or a decreasing z.
        """
        if self.t.size < 2:
            raise PathError("a path needs at least two nodes")
        steps = self.dt
        if np.any(steps <= 0):
            raise PathError("time grid must be strictly increasing", node=int(np.argmin(steps)) + 1)
        if np.max(np.abs(steps - steps[0])) > GRID_TOL * max(1.0, abs(self.t[-1])):
            raise PathError("time grid must be uniform", node=int(np.argmax(np.abs(steps - steps[0]))) + 1)
        if self.z.shape[1] != net.M or self.x.shape[1] != net.d:
            raise PathError(f"path has M={self.z.shape[1]}, d={self.x.shape[1]}; network has M={net.M}, d={net.d}")

        defect = np.abs(self.x - self.x[0] - (self.z - self.z[0]) @ net.xi)
        worst = np.max(defect, axis=1)
        if np.any(worst > IDENTITY_TOL):
            node = int(np.argmax(worst > IDENTITY_TOL))
            raise PathError(f"concentration identity fails at node {node}", node=node, violation=float(worst[node]))
        drops = np.diff(self.z, axis=0)
        if np.any(drops < -MONOTONE_TOL):
            node = int(np.argmax(np.min(drops, axis=1) < -MONOTONE_TOL)) + 1
            raise PathError(f"flux decreases at node {node}", node=node, violation=float(-np.min(drops)))

    def drift_defect(self, model: PDMPModel) -> float:
        """Max over intervals of |(u_{i+1} - u_i)/dt - trapezoid of A|."""
        if model.m == 0:
            return 0.0
        drift = np.array([model.drift_at(u, x) for u, x in zip(self.u, self.x)])
        slope = np.diff(self.u, axis=0) / self.dt[:, None]
        avg = 0.5 * (drift[:-1] + drift[1:])
        return float(np.max(np.abs(slope - avg)))

    def to_frame(self) -> pd.DataFrame:
        return trajectory_frame(self.t, self.x, self.u, self.z)

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "SmoothPath":
        if "t" not in df.columns:
            raise PathError("path table has no t column")
        return cls(
            t=df["t"].to_numpy(dtype=float),
            z=frame_block(df, "z"),
            x=frame_block(df, "x"),
            u=frame_block(df, "u"),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t.tolist(),
            "z": self.z.tolist(),
            "x": self.x.tolist(),
            "u": self.u.tolist(),
        }


def uniform_grid(T: float, intervals: int) -> np.ndarray:
    if intervals < 1:
        raise ValueError("need at least one interval")
    return np.linspace(0.0, float(T), int(intervals) + 1)


def sample_fluid(fluid: Any, T: float, intervals: int) -> SmoothPath:
    """Sample a dense deterministic path (a FluidPath) on a uniform grid."""
    t = uniform_grid(T, intervals)
    z, _, u = fluid.at(t)
    z = np.maximum.accumulate(np.maximum(z, 0.0), axis=0)
    x = fluid.model.x0 + z @ fluid.model.network.xi
    return SmoothPath(t=t, z=z, x=x, u=u)


def path_from_fluxes(
    model: PDMPModel,
    t: np.ndarray,
    z_func: Callable[[float], np.ndarray],
    *,
    settings: IntegratorSettings = DEFAULT_INTEGRATOR,
) -> SmoothPath:
    """
    Build a SmoothPath from a prescribed flux curve z(t).

    x follows from the linear identity; u is integrated along x(t) from
    model.u0 with the path's own drift.
    """
    t = np.asarray(t, dtype=float)
    net = model.network
    x0 = model.x0
    z = np.array([np.asarray(z_func(ti), dtype=float).reshape(net.M) for ti in t])
    x = x0 + z @ net.xi
    if model.m == 0:
        return SmoothPath(t=t, z=z, x=x, u=np.zeros((t.size, 0)))

    def rhs(s: float, u: np.ndarray) -> np.ndarray:
        xs = x0 + net.xi.T @ np.asarray(z_func(s), dtype=float).reshape(net.M)
        return model.drift_at(u, xs)

    try:
        sol = integrate(rhs, (float(t[0]), float(t[-1])), model.u0, settings, dense_output=False, t_eval=t)
    except (IntegrationError, ModelError) as exc:
        raise PathError(f"slow variable could not be integrated along the flux path: {exc}") from exc
    return SmoothPath(t=t, z=z, x=x, u=sol.y.T)


def linear_fluxes(t_nodes: np.ndarray, z_nodes: np.ndarray) -> Callable[[float], np.ndarray]:
    """Piecewise-linear interpolant of flux node values."""
    t_nodes = np.asarray(t_nodes, dtype=float)
    z_nodes = as_columns(z_nodes, t_nodes.size)

    def z_of_t(s: float) -> np.ndarray:
        return np.array([np.interp(s, t_nodes, z_nodes[:, a]) for a in range(z_nodes.shape[1])])

    return z_of_t


def constant_rate_path(model: PDMPModel, T: float, intervals: int, zdot: np.ndarray, *, settings: Optional[IntegratorSettings] = None) -> SmoothPath:
    """z(t) = zdot * t on a uniform grid."""
    zdot = np.asarray(zdot, dtype=float)
    return path_from_fluxes(
        model,
        uniform_grid(T, intervals),
        lambda s: zdot * s,
        settings=settings or DEFAULT_INTEGRATOR,
    )
