"""
Closed-form contracted Lagrangian of the two-reaction channel model.

With xi = (-1, +1) the constraint is xdot = zdot2 - zdot1 and the optimal
fluxes satisfy zdot1 * zdot2 = lambda1 * lambda2, so

    zdot1 = (-xdot + sqrt(xdot^2 + 4 lambda1 lambda2)) / 2,   zdot2 = xdot + zdot1,

and, writing S = zdot1 + zdot2 = sqrt(xdot^2 + 4 lambda1 lambda2),

    dLhat/dxdot = log(zdot2 / lambda2),   d2Lhat/dxdot2 = 1 / S,
    d2Lhat/dxdot dx = (zdot1/S) lambda1_x/lambda1 - (zdot2/S) lambda2_x/lambda2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from pdmp_ldp.calcium.params import CalciumParams
from pdmp_ldp.errors import SingularityError
from pdmp_ldp.ldp.contracted import LagrangianDerivatives
from pdmp_ldp.ldp.rate import INFINITE_ACTION, RATE_FLOOR, ActionValue

DENOMINATOR_FLOOR = 1e-12


def z1dot_quadratic(xdot: float, lambda1: float, lambda2: float) -> float:
    """
    Root of zdot1 (xdot + zdot1) = lambda1 lambda2 with zdot1 >= max(0, -xdot).

    The two algebraically equal forms are switched on the sign of xdot so the
    root is computed without cancellation.
    """
    xdot = float(xdot)
    product = float(lambda1) * float(lambda2)
    root = np.sqrt(xdot * xdot + 4.0 * product)
    if xdot > 0:
        return 2.0 * product / (xdot + root) if product > 0 else 0.0
    return 0.5 * (-xdot + root)


def calcium_contracted_lagrangian(xdot: float, lambda1: float, lambda2: float) -> Tuple[ActionValue, np.ndarray]:
    """(Lhat, (zdot1, zdot2)); infinite when a reaction at the rate floor must carry flux."""
    z1 = z1dot_quadratic(xdot, lambda1, lambda2)
    z2 = max(float(xdot) + z1, 0.0)
    zdot = np.array([z1, z2])
    rates = np.array([lambda1, lambda2], dtype=float)
    dead = rates <= RATE_FLOOR
    if np.any(dead & (zdot > 0)):
        return INFINITE_ACTION, zdot
    value = 0.0
    for q, lam in zip(zdot, rates):
        if lam <= RATE_FLOOR:
            value += lam
        elif q > 0:
            value += q * np.log(q / lam) - q + lam
        else:
            value += lam
    return float(value), zdot


def zdot_sensitivities(xdot: float, lambda1: float, lambda2: float) -> Dict[str, float]:
    """dzdot1/dxdot and d2zdot1/dxdot2."""
    z1 = z1dot_quadratic(xdot, lambda1, lambda2)
    S = 2.0 * z1 + float(xdot)
    if S <= DENOMINATOR_FLOOR:
        raise SingularityError("2 zdot1 + xdot is degenerate", condition=S)
    return {
        "z1dot": z1,
        "dz1_dxdot": -z1 / S,
        "d2z1_dxdot2": z1 / S**2 * (1.0 + float(xdot) / S),
    }


@dataclass(frozen=True)
class CalciumLagrangian:
    """Analytic contracted-Lagrangian provider registered on the calcium PDMPModel."""

    params: CalciumParams

    def derivatives(self, xdot: np.ndarray, x: np.ndarray, u: np.ndarray) -> LagrangianDerivatives:
        return calcium_lagrangian_derivatives(xdot, x, u, self.params)


def calcium_lagrangian_derivatives(
    xdot: np.ndarray,
    x: np.ndarray,
    u: np.ndarray,
    params: CalciumParams,
) -> LagrangianDerivatives:
    """
    Raises:
        SingularityError: a rate or an optimal flux is at the floor, or
            2 zdot1 + xdot is degenerate.
    """
    v = float(np.atleast_1d(xdot)[0])
    xx = float(np.atleast_1d(x)[0])
    u = np.atleast_1d(np.asarray(u, dtype=float))
    u1 = float(u[0])
    m = u.size

    lam1 = params.alpha_close * xx
    lam2 = params.alpha_open * u1 * (1.0 - xx)
    if lam1 <= RATE_FLOOR or lam2 <= RATE_FLOOR:
        raise SingularityError(
            "channel rates must be above the floor",
            reaction=0 if lam1 <= RATE_FLOOR else 1,
        )
    sens = zdot_sensitivities(v, lam1, lam2)
    z1 = sens["z1dot"]
    dz1 = sens["dz1_dxdot"]
    z2 = v + z1
    if z1 <= RATE_FLOOR or z2 <= RATE_FLOOR:
        raise SingularityError("optimal flux is at the floor", reaction=0 if z1 <= RATE_FLOOR else 1)
    S = z1 + z2

    # Rate gradients in x and u; lambda1 does not depend on u.
    l1_x = params.alpha_close
    l2_x = -params.alpha_open * u1
    l2_u = np.zeros(m)
    l2_u[0] = params.alpha_open * (1.0 - xx)

    theta = np.log(z2 / lam2)
    value = v * theta - (z1 + z2) + lam1 + lam2
    return LagrangianDerivatives(
        value=float(value),
        zdot=np.array([z1, z2]),
        dxdot=np.array([theta]),
        dx=np.array([(1.0 - z1 / lam1) * l1_x + (1.0 - z2 / lam2) * l2_x]),
        du=(1.0 - z2 / lam2) * l2_u,
        hess_xdot=np.array([[1.0 / S]]),
        cross_x=np.array([[(z1 / S) * l1_x / lam1 - (z2 / S) * l2_x / lam2]]),
        cross_u=(-(z2 / S) / lam2 * l2_u).reshape(1, m),
        dzdot_dxdot=np.array([[dz1], [1.0 + dz1]]),
        d2zdot_dxdot2=np.full((2, 1, 1), sens["d2z1_dxdot2"]),
    )
