"""
Direct minimization of the discretized action over piecewise-linear paths.

The unknowns are the interior x nodes; x(0) and x(T) are pinned. u follows
the slow ODE by Heun steps, and each interval contributes
dt * Lhat((x_{i+1} - x_i) / dt, x_mid, u_mid). The gradient comes from a
reverse sweep through the Heun recursion, and L-BFGS-B handles the box
bounds on x.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import minimize

from pdmp_ldp.errors import PdmpError
from pdmp_ldp.export.csv_export import trajectory_frame
from pdmp_ldp.ldp.contracted import contracted_derivatives
from pdmp_ldp.ldp.paths import SmoothPath
from pdmp_ldp.model.network import PDMPModel
from pdmp_ldp.numerics.arrays import as_columns
from pdmp_ldp.optimal_path.shooting import ShootingProblem

logger = logging.getLogger(__name__)

# Objective returned where Lhat is infinite or singular; the line search backs off.
INFEASIBLE_PENALTY = 1e12


@dataclass
class CollocationResult:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    zdot: np.ndarray
    action: float
    iterations: int
    converged: bool
    message: str
    gradient_norm: float
    # d(action)/d(u_i) from the reverse sweep; approximates the multiplier eta(t_i).
    eta: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @property
    def xdot(self) -> np.ndarray:
        return np.gradient(self.x, self.t, axis=0, edge_order=2)

    def smooth_path(self) -> SmoothPath:
        dt = np.diff(self.t)[:, None]
        z = np.vstack([np.zeros((1, self.zdot.shape[1])), np.cumsum(self.zdot * dt, axis=0)])
        return SmoothPath(t=self.t, z=z, x=self.x, u=self.u)

    def to_frame(self) -> pd.DataFrame:
        return trajectory_frame(self.t, self.x, self.u)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "action": self.action,
            "nodes": int(self.t.size),
            "iterations": self.iterations,
            "converged": self.converged,
            "message": self.message,
            "gradient_norm": self.gradient_norm,
        }


def _heun(model: PDMPModel, u: np.ndarray, x_left: np.ndarray, x_right: np.ndarray, dt: float):
    k1 = model.drift_at(u, x_left)
    trial = u + dt * k1
    k2 = model.drift_at(trial, x_right)
    return u + 0.5 * dt * (k1 + k2), trial


def _target(problem: ShootingProblem) -> np.ndarray:
    model = problem.model
    if problem.form == "contracted":
        return problem.x_target
    xi = model.network.xi.astype(float)
    if xi.shape[0] != xi.shape[1] or abs(np.linalg.det(xi)) < 1e-12:
        raise ValueError("collocation needs a concentration target unless xi is square and invertible")
    return model.x0 + xi.T @ problem.z_target


def _bounds(model: PDMPModel, count: int) -> list[Tuple[Optional[float], Optional[float]]]:
    if model.x_bounds is None:
        lo, hi = [0.0] * model.d, [None] * model.d
    else:
        lo, hi = list(model.x_bounds[0]), list(model.x_bounds[1])
    return [(lo[j], hi[j]) for _ in range(count) for j in range(model.d)]


class _Objective:
    """Discretized action and its gradient in the interior nodes."""

    def __init__(self, model: PDMPModel, x0: np.ndarray, x_end: np.ndarray, T: float, nodes: int):
        self.model = model
        self.x0 = x0
        self.x_end = x_end
        self.n = nodes
        self.dt = T / nodes
        self.adjoints = np.zeros((nodes + 1, model.m))

    def full_path(self, interior: np.ndarray) -> np.ndarray:
        return np.vstack([self.x0, interior.reshape(self.n - 1, self.model.d), self.x_end])

    def slow_path(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        model, dt = self.model, self.dt
        u = np.empty((self.n + 1, model.m))
        trial = np.empty((self.n, model.m))
        u[0] = model.u0
        for i in range(self.n):
            u[i + 1], trial[i] = _heun(model, u[i], x[i], x[i + 1], dt)
        return u, trial

    def __call__(self, interior: np.ndarray) -> Tuple[float, np.ndarray]:
        model, dt, n, d, m = self.model, self.dt, self.n, self.model.d, self.model.m
        x = self.full_path(interior)
        try:
            u, trial = self.slow_path(x)
            grad_x = np.zeros_like(x)
            grad_u = np.zeros((n + 1, m))
            total = 0.0
            for i in range(n):
                v = (x[i + 1] - x[i]) / dt
                der = contracted_derivatives(v, 0.5 * (x[i] + x[i + 1]), 0.5 * (u[i] + u[i + 1]), model)
                total += dt * der.value
                grad_x[i] += -der.dxdot + 0.5 * dt * der.dx
                grad_x[i + 1] += der.dxdot + 0.5 * dt * der.dx
                grad_u[i] += 0.5 * dt * der.du
                grad_u[i + 1] += 0.5 * dt * der.du

            # Reverse sweep through u_{i+1} = Phi(u_i, x_i, x_{i+1}).
            adjoint = grad_u[n].copy()
            adjoints = np.empty((n + 1, m))
            adjoints[n] = adjoint
            eye = np.eye(m)
            for i in range(n - 1, -1, -1):
                au, ax = model.drift_partials(u[i], x[i])
                bu, bx = model.drift_partials(trial[i], x[i + 1])
                d_u = eye + 0.5 * dt * (au + bu @ (eye + dt * au))
                d_x_left = 0.5 * dt * (ax + dt * (bu @ ax))
                d_x_right = 0.5 * dt * bx
                grad_x[i] += d_x_left.T @ adjoint
                grad_x[i + 1] += d_x_right.T @ adjoint
                adjoint = grad_u[i] + d_u.T @ adjoint
                adjoints[i] = adjoint
            self.adjoints = adjoints
        except (PdmpError, np.linalg.LinAlgError) as exc:
            logger.debug("collocation objective infeasible: %s", exc)
            return INFEASIBLE_PENALTY, np.zeros(interior.size)
        if not np.isfinite(total):
            return INFEASIBLE_PENALTY, np.zeros(interior.size)
        return float(total), grad_x[1:-1].reshape(-1)


def _initial_interior(problem: ShootingProblem, x_end: np.ndarray, nodes: int, init: Any) -> np.ndarray:
    model = problem.model
    t = np.linspace(0.0, problem.T, nodes + 1)
    if init is None:
        s = t[1:-1, None] / problem.T
        return ((1.0 - s) * model.x0 + s * x_end).reshape(-1)
    init_t = np.asarray(init.t, dtype=float)
    init_x = as_columns(init.x, init_t.size)
    cols = [np.interp(t[1:-1], init_t, init_x[:, j]) for j in range(model.d)]
    return np.column_stack(cols).reshape(-1)


def collocation_minimize(
    problem: ShootingProblem,
    nodes: int = 128,
    *,
    init: Any = None,
    max_iter: int = 5000,
    gtol: float = 1e-10,
) -> CollocationResult:
    """
    Minimize the discretized action with the same boundary data as a shooting
    problem. `init` may be any object with t and x arrays (for example an
    OptimalTrajectory); the straight line from x0 to the target is used
    otherwise.
    """
    if nodes < 2:
        raise ValueError("collocation needs at least two intervals")
    model = problem.model
    x_end = _target(problem)
    objective = _Objective(model, model.x0, x_end, problem.T, nodes)
    start = _initial_interior(problem, x_end, nodes, init)
    bounds = _bounds(model, nodes - 1)
    lo = np.array([b[0] if b[0] is not None else -np.inf for b in bounds])
    hi = np.array([b[1] if b[1] is not None else np.inf for b in bounds])
    start = np.clip(start, lo, hi)

    result = minimize(
        objective,
        start,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": max_iter, "ftol": 1e-15, "gtol": gtol, "maxcor": 30},
    )
    objective(result.x)
    x = objective.full_path(result.x)
    u, _ = objective.slow_path(x)
    dt = objective.dt
    zdot = np.array(
        [
            contracted_derivatives((x[i + 1] - x[i]) / dt, 0.5 * (x[i] + x[i + 1]), 0.5 * (u[i] + u[i + 1]), model).zdot
            for i in range(nodes)
        ]
    )
    grad_norm = float(np.max(np.abs(result.jac))) if result.jac.size else 0.0
    logger.info("collocation: action %.10g after %d iterations (%s)", result.fun, result.nit, result.message)
    return CollocationResult(
        t=np.linspace(0.0, problem.T, nodes + 1),
        x=x,
        u=u,
        zdot=zdot,
        action=float(result.fun),
        iterations=int(result.nit),
        converged=bool(result.success),
        message=str(result.message),
        gradient_norm=grad_norm,
        eta=np.array(objective.adjoints, dtype=float),
    )
