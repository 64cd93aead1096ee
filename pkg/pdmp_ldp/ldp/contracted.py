"""
Contracted Lagrangian: minimum of the flux Lagrangian over fluxes that produce
a given concentration velocity.

    Lhat(xdot, x, u) = min { sum_a lambda_a l(q_a / lambda_a) : q >= 0, xi^T q = xdot }

The minimizer has the exponential-family form q_a = lambda_a exp(theta . xi_a)
where theta minimizes the convex dual

    H(theta) = sum_a lambda_a (exp(theta . xi_a) - 1) - theta . xdot,

and Lhat = -H(theta*). When Newton on H does not converge, feasibility is
decided by a linear program and reactions forced to zero on the feasible face
are removed before retrying.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
from scipy.optimize import linprog

from pdmp_ldp.errors import ContractedLagrangianError, SingularityError
from pdmp_ldp.ldp.rate import INFINITE_ACTION, RATE_FLOOR, ActionValue, is_infinite
from pdmp_ldp.model.network import PDMPModel, ReactionNetwork

logger = logging.getLogger(__name__)

DUAL_TOL = 1e-13
MAX_DUAL_ITER = 100
# exp() argument cap; beyond it the dual is treated as +inf.
_EXP_CAP = 700.0
_SINGULAR_COND = 1e14
_FULL_STEP_DECREMENT = 1e-2
# gradients within this multiple of the tolerance count as converged once they stall
_STALL_FACTOR = 1e4


@dataclass
class InnerMinimum:
    value: ActionValue
    zdot: np.ndarray
    theta: np.ndarray
    iterations: int
    method: str

    def __iter__(self) -> Iterator:
        yield self.value
        yield self.zdot


def _dual_newton(xi: np.ndarray, rates: np.ndarray, xdot: np.ndarray, tol: float, max_iter: int) -> tuple[Optional[np.ndarray], int]:
    """
    Minimize H over theta; returns (theta, iterations) or (None, iterations).

    The gradient test is relative to the flux magnitude. Inside the quadratic
    region (Newton decrement below _FULL_STEP_DECREMENT) full steps are taken
    without a line search, and a gradient that stops shrinking there is at the
    round-off floor and is accepted.
    """
    d = xdot.size
    theta = np.zeros(d)
    xdot_scale = float(np.max(np.abs(xdot))) if xdot.size else 0.0

    def dual(th: np.ndarray) -> float:
        arg = xi @ th
        if np.any(arg > _EXP_CAP):
            return np.inf
        return float(np.sum(rates * (np.exp(arg) - 1.0)) - th @ xdot)

    value = dual(theta)
    best = np.inf
    for it in range(1, max_iter + 1):
        q = rates * np.exp(xi @ theta)
        grad = xi.T @ q - xdot
        gnorm = float(np.max(np.abs(grad)))
        gscale = max(1.0, float(np.sum(q)), xdot_scale)
        if gnorm <= tol * gscale:
            return theta, it - 1
        hess = (xi.T * q) @ xi
        step, *_ = np.linalg.lstsq(hess, -grad, rcond=None)
        decrement = -float(grad @ step)
        if decrement <= 0:
            step = -grad
            decrement = float(grad @ grad)
        if decrement < _FULL_STEP_DECREMENT:
            if gnorm >= best and gnorm <= _STALL_FACTOR * tol * gscale:
                return theta, it - 1
            best = min(best, gnorm)
            theta = theta + step
            value = dual(theta)
            continue
        t = 1.0
        for _ in range(60):
            trial = dual(theta + t * step)
            if trial <= value - 1e-4 * t * decrement:
                break
            t *= 0.5
        else:
            return None, it
        theta = theta + t * step
        new_value = dual(theta)
        # The dual is unbounded below when xdot leaves the reachable cone.
        if new_value < -1e12 * max(1.0, xdot_scale, float(np.max(rates))):
            return None, it
        value = new_value
    return None, max_iter


def _feasible_face(xi: np.ndarray, xdot: np.ndarray) -> Optional[np.ndarray]:
    """
    Reactions that can carry positive flux on {q >= 0, xi^T q = xdot}.

    Returns None when the set is empty.
    """
    M = xi.shape[0]
    res = linprog(np.zeros(M), A_eq=xi.T, b_eq=xdot, bounds=[(0, None)] * M, method="highs")
    if res.status != 0:
        return None
    free = np.zeros(M, dtype=bool)
    for a in range(M):
        c = np.zeros(M)
        c[a] = -1.0
        best = linprog(c, A_eq=xi.T, b_eq=xdot, bounds=[(0, 1e6)] * M, method="highs")
        if best.status == 0 and -best.fun > 1e-10:
            free[a] = True
    return free


def _solve(xi: np.ndarray, rates: np.ndarray, xdot: np.ndarray, tol: float, max_iter: int) -> InnerMinimum:
    M, d = xi.shape
    active = rates > RATE_FLOOR
    zdot = np.zeros(M)

    def assemble(mask: np.ndarray, theta: np.ndarray, iterations: int, method: str) -> InnerMinimum:
        q = np.zeros(M)
        q[mask] = rates[mask] * np.exp(xi[mask] @ theta)
        # Dropped reactions keep q = 0 and contribute lambda l(0) = lambda.
        value = float(np.sum(q[mask] * (xi[mask] @ theta) - q[mask] + rates[mask]) + np.sum(rates[~mask]))
        return InnerMinimum(max(value, 0.0), q, theta, iterations, method)

    if not np.any(active):
        if np.max(np.abs(xdot)) <= tol:
            return InnerMinimum(float(np.sum(rates)), zdot, np.zeros(d), 0, "empty")
        return InnerMinimum(INFINITE_ACTION, zdot, np.zeros(d), 0, "empty")

    theta, iterations = _dual_newton(xi[active], rates[active], xdot, tol, max_iter)
    if theta is not None:
        return assemble(active, theta, iterations, "newton")

    face = _feasible_face(xi[active], xdot)
    if face is None:
        return InnerMinimum(INFINITE_ACTION, zdot, np.zeros(d), iterations, "infeasible")
    mask = np.zeros(M, dtype=bool)
    mask[np.flatnonzero(active)[face]] = True
    if not np.any(mask):
        # Only q = 0 is feasible, so xdot = 0.
        return assemble(mask, np.zeros(d), iterations, "face")
    theta, more = _dual_newton(xi[mask], rates[mask], xdot, tol, max_iter)
    if theta is None:
        raise ContractedLagrangianError(
            "dual Newton did not converge on the feasible face",
            iterations=iterations + more,
        )
    logger.debug("contracted Lagrangian solved on a face with %d of %d reactions", int(mask.sum()), M)
    return assemble(mask, theta, iterations + more, "face")


def contracted_lagrangian(
    xdot: np.ndarray,
    x: np.ndarray,
    u: np.ndarray,
    net: ReactionNetwork,
    *,
    tol: float = DUAL_TOL,
    max_iter: int = MAX_DUAL_ITER,
) -> InnerMinimum:
    """
    Value and minimizing fluxes of the contracted Lagrangian at (xdot, x, u).

    The value is INFINITE_ACTION when no nonnegative flux produces xdot.

    Raises:
        ContractedLagrangianError: xdot is feasible but the dual iteration
            still fails after face reduction.
    """
    xdot = np.atleast_1d(np.asarray(xdot, dtype=float))
    return _solve(net.xi.astype(float), net.rates(x, u), xdot, tol, max_iter)


@dataclass
class LagrangianDerivatives:
    """Contracted Lagrangian with first and second derivatives at one point."""

    value: float
    zdot: np.ndarray
    dxdot: np.ndarray
    dx: np.ndarray
    du: np.ndarray
    hess_xdot: np.ndarray
    cross_x: np.ndarray
    cross_u: np.ndarray
    # Sensitivities of the optimal fluxes to xdot, shapes (M, d) and (M, d, d), where known.
    dzdot_dxdot: Optional[np.ndarray] = None
    d2zdot_dxdot2: Optional[np.ndarray] = None


def contracted_derivatives(
    xdot: np.ndarray,
    x: np.ndarray,
    u: np.ndarray,
    model: PDMPModel,
    *,
    analytic: bool = True,
) -> LagrangianDerivatives:
    """
    Derivatives of Lhat for any network, via the dual variable:

        dLhat/dxdot = theta,  dLhat/dx = sum_a (1 - q_a/lambda_a) grad_x lambda_a,
        d2Lhat/dxdot2 = (sum_a q_a xi_a xi_a^T)^-1,
        d2Lhat/dxdot dx = -(d2Lhat/dxdot2) sum_a xi_a (q_a/lambda_a) grad_x lambda_a^T.

    A registered analytic provider on the model takes precedence when
    `analytic` is true.

    Raises:
        SingularityError: Lhat is infinite at the point or its Hessian in
            xdot is numerically singular.
    """
    if analytic and model.lagrangian is not None:
        return model.lagrangian.derivatives(xdot, x, u)

    net = model.network
    xdot = np.atleast_1d(np.asarray(xdot, dtype=float))
    rates = net.rates(x, u)
    inner = _solve(net.xi.astype(float), rates, xdot, DUAL_TOL, MAX_DUAL_ITER)
    if is_infinite(inner.value):
        raise SingularityError("contracted Lagrangian is infinite at this state")

    xi = net.xi.astype(float)
    q = inner.zdot
    ratio = np.where(rates > RATE_FLOOR, q / np.where(rates > RATE_FLOOR, rates, 1.0), 0.0)
    gx, gu = net.rate_gradients(x, u)
    curvature = (xi.T * q) @ xi
    cond = float(np.linalg.cond(curvature))
    if not np.isfinite(cond) or cond > _SINGULAR_COND:
        raise SingularityError("flux curvature matrix is singular", condition=cond)
    hess = np.linalg.inv(curvature)
    weighted = xi.T * ratio
    return LagrangianDerivatives(
        value=float(inner.value),
        zdot=q,
        dxdot=inner.theta,
        dx=gx.T @ (1.0 - ratio),
        du=gu.T @ (1.0 - ratio),
        hess_xdot=hess,
        cross_x=-hess @ (weighted @ gx),
        cross_u=-hess @ (weighted @ gu),
        dzdot_dxdot=(xi * q[:, None]) @ hess,
    )
