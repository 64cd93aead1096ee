"""
Euler-Lagrange systems of the action with the slow ODE enforced by
multipliers eta (Lagrangian L + eta . (A(u, x) - udot)).

Contracted form, state (x, xdot, u, eta):

    Lhat_vv xddot = Lhat_x + A_x^T eta - Lhat_vx xdot - Lhat_vu A
    etadot = -Lhat_u - A_u^T eta,   udot = A.

Flux form, state (z, zdot, u, eta), x = x0 + xi^T z:

    zddot_a / zdot_a = lambdadot_a / lambda_a + xi_a . (L_x + A_x^T eta)
    etadot = -L_u - A_u^T eta,   udot = A,

with L_x = sum_a (1 - zdot_a/lambda_a) grad_x lambda_a and likewise L_u. Where a
flux or a rate sits at the floor the flux form is degenerate and the
derivatives come from the contracted system instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from pdmp_ldp.errors import SingularityError
from pdmp_ldp.ldp.contracted import contracted_derivatives
from pdmp_ldp.ldp.rate import RATE_FLOOR
from pdmp_ldp.model.network import PDMPModel

logger = logging.getLogger(__name__)

HESSIAN_COND_LIMIT = 1e12
# Step of the directional difference that carries the contracted fluxes along the flow.
_FLUX_STEP = 1e-5


@dataclass
class ELState:
    t: float
    x: np.ndarray
    xdot: np.ndarray
    u: np.ndarray
    eta: np.ndarray
    z: Optional[np.ndarray] = None
    zdot: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        for name in ("x", "xdot", "u", "eta", "z", "zdot"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, np.atleast_1d(np.asarray(value, dtype=float)))

    @classmethod
    def from_fluxes(cls, model: PDMPModel, t: float, z: np.ndarray, zdot: np.ndarray, u: np.ndarray, eta: np.ndarray, x0: Optional[np.ndarray] = None) -> "ELState":
        xi = model.network.xi
        base = model.x0 if x0 is None else np.asarray(x0, dtype=float)
        z = np.asarray(z, dtype=float)
        zdot = np.asarray(zdot, dtype=float)
        return cls(t=t, x=base + xi.T @ z, xdot=xi.T @ zdot, u=u, eta=eta, z=z, zdot=zdot)


@dataclass
class ContractedRHS:
    xdot: np.ndarray
    xddot: np.ndarray
    udot: np.ndarray
    etadot: np.ndarray
    lagrangian: float


@dataclass
class FluxRHS:
    zdot: np.ndarray
    zddot: np.ndarray
    udot: np.ndarray
    etadot: np.ndarray
    lagrangian: float


def assemble_contracted_el_rhs(state: ELState, model: PDMPModel) -> ContractedRHS:
    """
    Time derivatives of (x, xdot, u, eta) for the contracted Euler-Lagrange system.

    Raises:
        SingularityError: Lhat is singular at the state or its Hessian in
            xdot is ill-conditioned (condition estimate attached).
    """
    der = contracted_derivatives(state.xdot, state.x, state.u, model)
    a_u, a_x = model.drift_partials(state.u, state.x)
    drift = model.drift_at(state.u, state.x)

    hess = np.atleast_2d(der.hess_xdot)
    cond = float(np.linalg.cond(hess))
    if not np.isfinite(cond) or cond > HESSIAN_COND_LIMIT:
        raise SingularityError("Hessian of the contracted Lagrangian is singular", condition=cond)

    force = der.dx + a_x.T @ state.eta - der.cross_x @ state.xdot
    if model.m:
        force = force - der.cross_u @ drift
    xddot = np.linalg.solve(hess, force)
    etadot = -der.du - a_u.T @ state.eta if model.m else np.zeros(0)
    return ContractedRHS(xdot=state.xdot, xddot=xddot, udot=drift, etadot=etadot, lagrangian=der.value)


def assemble_flux_el_rhs(state: ELState, model: PDMPModel) -> FluxRHS:
    """
    Time derivatives of (z, zdot, u, eta) for the flux-space Euler-Lagrange system.

    A flux or rate at the floor switches to the contracted system: zdot is
    replaced by the cheapest decomposition of xi^T zdot and zddot is its
    derivative along the contracted flow.

    Raises:
        SingularityError: the contracted fallback is itself singular.
    """
    if state.zdot is None:
        raise ValueError("flux-form assembly needs zdot on the state")
    net = model.network
    zdot = state.zdot
    rates = net.rates(state.x, state.u)
    degenerate = np.nonzero((rates <= RATE_FLOOR) | (zdot <= RATE_FLOOR))[0]
    if degenerate.size:
        logger.debug("flux form degenerate in reactions %s at t=%.6g", degenerate.tolist(), state.t)
        return _contracted_flux_rhs(state, model)

    gx, gu = net.rate_gradients(state.x, state.u)
    a_u, a_x = model.drift_partials(state.u, state.x)
    drift = model.drift_at(state.u, state.x)
    xi = net.xi.astype(float)

    slack = 1.0 - zdot / rates
    l_x = gx.T @ slack
    l_u = gu.T @ slack
    rate_dot = gx @ (xi.T @ zdot) + (gu @ drift if model.m else 0.0)
    pull = l_x + a_x.T @ state.eta
    zddot = zdot * (rate_dot / rates + xi @ pull)
    etadot = -l_u - a_u.T @ state.eta if model.m else np.zeros(0)
    q = zdot
    lagrangian = float(np.sum(q * np.log(q / rates) - q + rates))
    return FluxRHS(zdot=zdot, zddot=zddot, udot=drift, etadot=etadot, lagrangian=lagrangian)


def _contracted_flux_rhs(state: ELState, model: PDMPModel) -> FluxRHS:
    xdot = model.network.xi.T.astype(float) @ state.zdot
    contracted = assemble_contracted_el_rhs(
        ELState(t=state.t, x=state.x, xdot=xdot, u=state.u, eta=state.eta), model
    )
    zdot = contracted_derivatives(xdot, state.x, state.u, model).zdot
    direction = (contracted.xddot, xdot, contracted.udot)
    scale = max(1.0, *(float(np.max(np.abs(v))) for v in direction if v.size))
    h = _FLUX_STEP / scale
    ahead = contracted_derivatives(xdot + h * contracted.xddot, state.x + h * xdot, state.u + h * contracted.udot, model)
    behind = contracted_derivatives(xdot - h * contracted.xddot, state.x - h * xdot, state.u - h * contracted.udot, model)
    zddot = (ahead.zdot - behind.zdot) / (2.0 * h)
    return FluxRHS(
        zdot=zdot, zddot=zddot, udot=contracted.udot, etadot=contracted.etadot, lagrangian=contracted.lagrangian
    )


def el_residual(trajectory: Any, model: PDMPModel) -> float:
    """
    Sup norm of the discretized contracted Euler-Lagrange residual along a
    trajectory with fields t, x, xdot, u, eta: central differences of
    dLhat/dxdot and of eta against their right-hand sides at interior nodes.
    """
    t = np.asarray(trajectory.t, dtype=float)
    n = t.size
    if n < 3:
        raise ValueError("need at least three nodes")
    momentum = np.empty((n, model.d))
    force = np.empty((n, model.d))
    eta_rhs = np.empty((n, model.m))
    for i in range(n):
        x, v, u, eta = trajectory.x[i], trajectory.xdot[i], trajectory.u[i], trajectory.eta[i]
        der = contracted_derivatives(v, x, u, model)
        a_u, a_x = model.drift_partials(u, x)
        momentum[i] = der.dxdot
        force[i] = der.dx + a_x.T @ eta
        eta_rhs[i] = -der.du - a_u.T @ eta if model.m else np.zeros(0)

    h2 = (t[2:] - t[:-2])[:, None]
    worst = float(np.max(np.abs((momentum[2:] - momentum[:-2]) / h2 - force[1:-1])))
    if model.m:
        eta = np.asarray(trajectory.eta, dtype=float)
        worst = max(worst, float(np.max(np.abs((eta[2:] - eta[:-2]) / h2 - eta_rhs[1:-1]))))
    return worst
