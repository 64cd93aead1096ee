"""
Time rescaling of flux paths by their integrated intensities, and its inverse.

Forward: Lambda_a(t) = int_0^t lambda_a(x, u) ds and w_a(s) = z_a(Lambda_a^-1(s)),
so each w_a lives on [0, Lambda_a(T)]. Inverse: integrate Lambda and u
forward with z_a(t) = w_a(Lambda_a(t)) feeding back into the rates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid
from scipy.interpolate import PchipInterpolator

from pdmp_ldp.errors import IntegrationError, ModelError, RateFloorError
from pdmp_ldp.ldp.paths import SmoothPath
from pdmp_ldp.ldp.rate import RATE_FLOOR
from pdmp_ldp.model.network import PDMPModel
from pdmp_ldp.numerics.ode import SHOOTING_INTEGRATOR, IntegratorSettings, integrate


@dataclass
class RescaledPaths:
    """The M rescaled flux paths w_a with the clock values they were built from."""

    t: np.ndarray
    clock: np.ndarray
    z: np.ndarray
    x0: np.ndarray
    u0: np.ndarray
    w: List[PchipInterpolator]

    @property
    def tau(self) -> np.ndarray:
        """Lambda_a(T), the right end of each rescaled time axis."""
        return self.clock[-1].copy()

    def w_at(self, alpha: int, s: Union[float, np.ndarray]) -> np.ndarray:
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.tau[alpha])
        return self.w[alpha](s)

    def sample(self, alpha: int, points: int = 513) -> tuple[np.ndarray, np.ndarray]:
        s = np.linspace(0.0, self.tau[alpha], points)
        return s, self.w_at(alpha, s)


def _cumulative(values: np.ndarray, t: np.ndarray) -> np.ndarray:
    if t.size >= 3:
        out = cumulative_simpson(values, x=t, initial=0.0)
        if np.all(np.diff(out) > 0):
            return out
    return cumulative_trapezoid(values, x=t, initial=0.0)


def time_rescale_map(path: SmoothPath, model: PDMPModel) -> RescaledPaths:
    """
    Raises:
        RateFloorError: some lambda_a is at or below the rate floor on the
            path; the interval around the first offending node is reported.
        PathError: the path is inconsistent.
    """
    net = model.network
    path.validate(net)
    rates = np.array([net.rates(x, u) for x, u in zip(path.x, path.u)])
    low = rates <= RATE_FLOOR
    if np.any(low):
        node, alpha = (int(v[0]) for v in np.nonzero(low))
        lo = float(path.t[max(node - 1, 0)])
        hi = float(path.t[min(node + 1, path.nodes - 1)])
        raise RateFloorError(
            f"rate of reaction {alpha} falls to the floor near t={path.t[node]:.6g}",
            reaction=alpha,
            interval=(lo, hi),
        )

    clock = np.column_stack([_cumulative(rates[:, a], path.t) for a in range(net.M)])
    w = [PchipInterpolator(clock[:, a], path.z[:, a], extrapolate=True) for a in range(net.M)]
    return RescaledPaths(t=path.t.copy(), clock=clock, z=path.z.copy(), x0=path.x[0].copy(), u0=path.u[0].copy(), w=w)


def inverse_time_rescale(
    w: Union[RescaledPaths, Sequence[Callable[[float], float]]],
    model: PDMPModel,
    t: Optional[np.ndarray] = None,
    *,
    settings: IntegratorSettings = SHOOTING_INTEGRATOR,
) -> SmoothPath:
    """
    Rebuild (z, x, u) on the grid t from rescaled paths.

    With a RescaledPaths argument the grid and the initial state default to
    those of the source path; plain callables use model.x0 / model.u0.

    Raises:
        RateFloorError: a rate reaches the floor during reconstruction.
    """
    if isinstance(w, RescaledPaths):
        grid = w.t if t is None else np.asarray(t, dtype=float)
        x0, u0 = w.x0, w.u0
        funcs: List[Callable[[float], float]] = [lambda s, a=a: float(w.w_at(a, s)) for a in range(len(w.w))]
    else:
        if t is None:
            raise ValueError("a time grid is required for plain rescaled paths")
        grid = np.asarray(t, dtype=float)
        x0, u0 = model.x0, model.u0
        funcs = list(w)

    net = model.network
    M, m = net.M, model.m
    if len(funcs) != M:
        raise ValueError(f"expected {M} rescaled paths, got {len(funcs)}")

    def fluxes(clock: np.ndarray) -> np.ndarray:
        return np.array([funcs[a](clock[a]) for a in range(M)])

    def rhs(s: float, y: np.ndarray) -> np.ndarray:
        clock, u = y[:M], y[M:]
        x = x0 + net.xi.T @ fluxes(clock)
        rates = net.rates(np.maximum(x, 0.0), u)
        low = np.flatnonzero(rates <= RATE_FLOOR)
        if low.size:
            raise RateFloorError(
                f"rate of reaction {int(low[0])} reached the floor during reconstruction",
                reaction=int(low[0]),
                interval=(float(s), float(s)),
            )
        drift = model.drift_at(u, np.maximum(x, 0.0)) if m else np.zeros(0)
        return np.concatenate([rates, drift])

    y0 = np.concatenate([np.zeros(M), u0])
    try:
        sol = integrate(rhs, (float(grid[0]), float(grid[-1])), y0, settings, dense_output=False, t_eval=grid)
    except (IntegrationError, ModelError) as exc:
        raise RateFloorError(f"reconstruction failed: {exc}") from exc

    clock = sol.y[:M].T
    z = np.array([fluxes(c) for c in clock])
    z = np.maximum.accumulate(z, axis=0)
    return SmoothPath(t=grid, z=z, x=x0 + z @ net.xi, u=sol.y[M:].T)
