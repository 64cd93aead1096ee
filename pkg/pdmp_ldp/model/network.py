"""
Reaction networks and piecewise-deterministic Markov models.

A ReactionNetwork holds the stoichiometric vectors and per-capita intensities
of the jump part; a PDMPModel couples it to the slow drift du/dt = A(u, x),
initial conditions and the system size N.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Callable, Optional, Protocol, Sequence, Tuple

import numpy as np

from pdmp_ldp.errors import ModelEvaluationError, NetworkStructureError
from pdmp_ldp.numerics.differentiation import jacobian

if TYPE_CHECKING:
    from pdmp_ldp.ldp.contracted import LagrangianDerivatives

Intensity = Callable[[np.ndarray, np.ndarray], float]
IntensityGradient = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]
Drift = Callable[[np.ndarray, np.ndarray], np.ndarray]
DriftJacobian = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]


class AnalyticLagrangian(Protocol):
    """Closed-form contracted Lagrangian registered by a concrete model."""

    def derivatives(self, xdot: np.ndarray, x: np.ndarray, u: np.ndarray) -> "LagrangianDerivatives":
        ...


@dataclass(frozen=True, eq=False)
class ReactionNetwork:
    """
    Jump structure of the process.

    xi has shape (M, d): row alpha is the integer change in species counts
    when reaction alpha fires. intensities[alpha](x, u) is the per-capita
    rate; the total rate at size N is N times that.
    """

    xi: np.ndarray
    intensities: Tuple[Intensity, ...]
    rate_bound: float
    intensity_gradients: Optional[Tuple[IntensityGradient, ...]] = None
    species: Tuple[str, ...] = ()
    reactions: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        xi = np.atleast_2d(np.asarray(self.xi, dtype=float))
        if xi.size == 0 or xi.shape[0] == 0:
            raise NetworkStructureError("network has no reactions")
        if not np.all(np.isfinite(xi)) or not np.all(xi == np.round(xi)):
            raise NetworkStructureError("stoichiometric vectors must be integer")
        zero_rows = np.flatnonzero(~xi.any(axis=1))
        if zero_rows.size:
            raise NetworkStructureError(f"reaction {int(zero_rows[0])} has a zero stoichiometric vector")
        if len(self.intensities) != xi.shape[0]:
            raise NetworkStructureError(
                f"{xi.shape[0]} stoichiometric vectors but {len(self.intensities)} intensities"
            )
        if self.intensity_gradients is not None and len(self.intensity_gradients) != xi.shape[0]:
            raise NetworkStructureError("one intensity gradient per reaction is required")
        if self.rate_bound < 0:
            raise NetworkStructureError("rate_bound must be >= 0")
        object.__setattr__(self, "xi", xi.astype(int))
        object.__setattr__(self, "intensities", tuple(self.intensities))

    @property
    def d(self) -> int:
        return int(self.xi.shape[1])

    @property
    def M(self) -> int:
        return int(self.xi.shape[0])

    def rates(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """All per-capita intensities at (x, u), shape (M,)."""
        return np.array([intensity(self, x, u, a) for a in range(self.M)])

    def rate_gradients(self, x: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        (d lambda / dx, d lambda / du) with shapes (M, d) and (M, m).

        Registered analytic gradients are used when present, central
        differences otherwise.
        """
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        if self.intensity_gradients is not None:
            gx = np.empty((self.M, self.d))
            gu = np.empty((self.M, u.size))
            for a, grad in enumerate(self.intensity_gradients):
                dx, du = grad(x, u)
                gx[a] = dx
                gu[a] = du
            return gx, gu
        gx = jacobian(lambda xx: self.rates(xx, u), x) if x.size else np.zeros((self.M, 0))
        gu = jacobian(lambda uu: self.rates(x, uu), u) if u.size else np.zeros((self.M, 0))
        return gx, gu


def intensity(net: ReactionNetwork, x: np.ndarray, u: np.ndarray, alpha: int) -> float:
    """
    Per-capita rate lambda_alpha(x, u). Callers multiply by N for the jump rate.

    Raises:
        ModelEvaluationError: if the intensity is non-finite or negative.
    """
    value = float(net.intensities[alpha](x, u))
    if not np.isfinite(value):
        raise ModelEvaluationError(f"intensity {alpha} is not finite", reaction=alpha, value=value)
    if value < 0.0:
        raise ModelEvaluationError(f"intensity {alpha} is negative", reaction=alpha, value=value)
    return value


@dataclass(frozen=True, eq=False)
class PDMPModel:
    """A reaction network coupled to a slow ODE, at system size `scale`."""

    network: ReactionNetwork
    drift: Drift
    m: int
    u0: np.ndarray
    x0: np.ndarray
    scale: int
    drift_jacobian: Optional[DriftJacobian] = None
    lagrangian: Optional[AnalyticLagrangian] = None
    # Box for x used by path optimizers; None means the positive orthant.
    x_bounds: Optional[Tuple[Sequence[float], Sequence[float]]] = None
    name: str = "custom"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        u0 = np.atleast_1d(np.asarray(self.u0, dtype=float)).reshape(-1)
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float)).reshape(-1)
        if self.m < 0 or u0.size != self.m:
            raise NetworkStructureError(f"u0 has {u0.size} entries, expected m={self.m}")
        if x0.size != self.network.d:
            raise NetworkStructureError(f"x0 has {x0.size} entries, expected d={self.network.d}")
        if np.any(x0 < 0):
            raise NetworkStructureError("x0 must be nonnegative")
        if int(self.scale) < 1:
            raise NetworkStructureError("scale N must be a positive integer")
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "scale", int(self.scale))
        a0 = np.asarray(self.drift(u0, x0), dtype=float).reshape(-1)
        if a0.size != self.m or not np.all(np.isfinite(a0)):
            raise NetworkStructureError("drift at (u0, x0) must be finite with m components")

    @property
    def d(self) -> int:
        return self.network.d

    @property
    def M(self) -> int:
        return self.network.M

    def drift_at(self, u: np.ndarray, x: np.ndarray) -> np.ndarray:
        if self.m == 0:
            return np.zeros(0)
        value = np.asarray(self.drift(u, x), dtype=float).reshape(-1)
        if not np.all(np.isfinite(value)):
            raise ModelEvaluationError("drift is not finite", value=float(np.nanmax(np.abs(value))))
        return value

    def drift_partials(self, u: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(dA/du, dA/dx) with shapes (m, m) and (m, d)."""
        u = np.asarray(u, dtype=float)
        x = np.asarray(x, dtype=float)
        if self.m == 0:
            return np.zeros((0, 0)), np.zeros((0, self.d))
        if self.drift_jacobian is not None:
            au, ax = self.drift_jacobian(u, x)
            return np.asarray(au, dtype=float), np.asarray(ax, dtype=float)
        au = jacobian(lambda uu: self.drift_at(uu, x), u)
        ax = jacobian(lambda xx: self.drift_at(u, xx), x)
        return au, ax

    def mean_drift(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Deterministic velocity sum_alpha xi_alpha lambda_alpha(x, u)."""
        return self.network.xi.T @ self.network.rates(x, u)

    def with_initial(
        self,
        *,
        x0: Any = None,
        u0: Any = None,
        scale: int | None = None,
    ) -> "PDMPModel":
        return replace(
            self,
            x0=self.x0 if x0 is None else x0,
            u0=self.u0 if u0 is None else u0,
            scale=self.scale if scale is None else scale,
        )
