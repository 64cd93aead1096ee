"""
Deterministic (large-N) limit of the PDMP and its fixed point.

The fluid limit integrates dz/dt = lambda(x, u), du/dt = A(u, x) with
x = x0 + sum_alpha z_alpha xi_alpha. The fixed point solves
(sum_alpha xi_alpha lambda_alpha, A) = 0 in (x, u); conserved linear
combinations of the state (the left null space of the Jacobian) are pinned to
their values at the starting point so the Newton system stays nonsingular.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from pdmp_ldp.errors import FixedPointError, IntegrationError, ModelError, SimulationError
from pdmp_ldp.export.csv_export import trajectory_frame
from pdmp_ldp.model.network import PDMPModel
from pdmp_ldp.numerics.newton import damped_newton
from pdmp_ldp.numerics.ode import DEFAULT_INTEGRATOR, IntegratorSettings, integrate

logger = logging.getLogger(__name__)

FIXED_POINT_TOL = 1e-10
DEFAULT_RELAX_TIME = 50.0
# slack on x_bounds when checking that a stationary state is admissible
_BOUND_SLACK = 1e-6


@dataclass
class FluidPath:
    """Deterministic path with nodes from the adaptive integrator and dense output."""

    t: np.ndarray
    z: np.ndarray
    x: np.ndarray
    u: np.ndarray
    model: PDMPModel = field(repr=False)
    _sol: Any = field(default=None, repr=False)

    def at(self, times: Sequence[float] | np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(z, x, u) evaluated at arbitrary times in [0, T] from the dense output."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        M, m = self.model.M, self.model.m
        y = self._sol.sol(times).T
        z = y[:, :M]
        x = self.model.x0 + z @ self.model.network.xi
        return z, x, y[:, M : M + m]

    def to_frame(self) -> pd.DataFrame:
        return trajectory_frame(self.t, self.x, self.u, self.z)


def deterministic_limit(
    model: PDMPModel,
    T: float,
    *,
    settings: IntegratorSettings = DEFAULT_INTEGRATOR,
    t_eval: Optional[np.ndarray] = None,
) -> FluidPath:
    """
    Integrate the fluid limit on [0, T] starting from (model.x0, model.u0).

    Raises:
        SimulationError: intensity or drift evaluation failed, or the
            integrator could not advance.
    """
    if T <= 0:
        raise ValueError("horizon T must be positive")
    net = model.network
    M = net.M
    x0 = model.x0

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        z, u = y[:M], y[M:]
        x = x0 + net.xi.T @ z
        try:
            return np.concatenate([net.rates(np.maximum(x, 0.0), u), model.drift_at(u, np.maximum(x, 0.0))])
        except ModelError as exc:
            raise SimulationError(str(exc), t=t) from exc

    y0 = np.concatenate([np.zeros(M), model.u0])
    try:
        sol = integrate(rhs, (0.0, T), y0, settings, t_eval=t_eval)
    except IntegrationError as exc:
        raise SimulationError(f"fluid-limit integration failed: {exc}", t=exc.t) from exc

    z = sol.y[:M].T
    # Rates are nonnegative, so any decrease is integrator noise.
    z = np.maximum.accumulate(np.maximum(z, 0.0), axis=0)
    return FluidPath(
        t=sol.t,
        z=z,
        x=x0 + z @ net.xi,
        u=sol.y[M:].T,
        model=model,
        _sol=sol,
    )


@dataclass
class FixedPoint:
    x: np.ndarray
    u: np.ndarray
    residual: float
    iterations: int
    # Rows are the conserved linear combinations of (x, u) that were pinned.
    conserved: np.ndarray
    history: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": self.x.tolist(),
            "u": self.u.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "conserved": self.conserved.tolist(),
        }


def _balance(model: PDMPModel, y: np.ndarray) -> np.ndarray:
    d = model.d
    x, u = y[:d], y[d:]
    return np.concatenate([model.mean_drift(x, u), model.drift_at(u, x)])


def _balance_jacobian(model: PDMPModel, y: np.ndarray) -> np.ndarray:
    d = model.d
    x, u = y[:d], y[d:]
    gx, gu = model.network.rate_gradients(x, u)
    au, ax = model.drift_partials(u, x)
    xi_t = model.network.xi.T.astype(float)
    top = np.hstack([xi_t @ gx, xi_t @ gu])
    if model.m == 0:
        return top
    return np.vstack([top, np.hstack([ax, au])])


def conserved_directions(model: PDMPModel, y: np.ndarray, *, tol: float = 1e-9) -> np.ndarray:
    """
    Orthonormal rows w with w . F(y) identically zero near y.

    Candidates come from the left singular vectors of the balance Jacobian at
    y; a candidate is kept only if it also annihilates the Jacobian at two
    nearby points.
    """
    jac = _balance_jacobian(model, y)
    U, s, _ = np.linalg.svd(jac)
    cutoff = tol * max(1.0, float(s[0]) if s.size else 1.0)
    rank = int(np.sum(s > cutoff))
    candidates = U[:, rank:].T
    if candidates.size == 0:
        return np.zeros((0, y.size))

    rng = np.random.default_rng(0)
    keep = []
    for w in candidates:
        ok = True
        for _ in range(2):
            probe = y * (1.0 + 0.01 * rng.uniform(-1.0, 1.0, size=y.size))
            probe[: model.d] = np.clip(probe[: model.d], 0.0, None)
            if np.max(np.abs(w @ _balance_jacobian(model, probe))) > 1e-6 * max(1.0, np.max(np.abs(jac))):
                ok = False
                break
        if ok:
            keep.append(w)
    return np.array(keep).reshape(len(keep), y.size)


def _admissible(model: PDMPModel, x: np.ndarray) -> bool:
    if np.any(x < -_BOUND_SLACK):
        return False
    if model.x_bounds is None:
        return True
    low, high = (np.asarray(b, dtype=float).reshape(model.d) for b in model.x_bounds)
    return bool(np.all(x >= low - _BOUND_SLACK) and np.all(x <= high + _BOUND_SLACK))


def fixed_point(
    model: PDMPModel,
    guess: Optional[tuple[np.ndarray, np.ndarray]] = None,
    *,
    relax_time: Optional[float] = DEFAULT_RELAX_TIME,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = 50,
) -> FixedPoint:
    """
    Stationary point of the fluid limit.

    Args:
        guess: (x, u) starting point; defaults to (model.x0, model.u0).
        relax_time: the fluid limit is first run for this long from the guess
            and Newton starts from its endpoint; None or 0 starts Newton at
            the guess itself. Conserved quantities keep their value from the
            guess either way.

    Raises:
        FixedPointError: Newton did not reach `tol` (carries the last
            residual), or it converged to a root with x outside the positive
            orthant or outside model.x_bounds.
    """
    x_start, u_start = guess if guess is not None else (model.x0, model.u0)
    x_start = np.asarray(x_start, dtype=float).reshape(model.d)
    u_start = np.asarray(u_start, dtype=float).reshape(model.m)
    if np.any(x_start < 0):
        raise FixedPointError("fixed-point guess must lie in the positive orthant")
    y_ref = np.concatenate([x_start, u_start])

    if relax_time is not None and relax_time > 0:
        relaxed = deterministic_limit(model.with_initial(x0=x_start, u0=u_start), relax_time)
        y_start = np.concatenate([relaxed.x[-1], relaxed.u[-1]])
        logger.debug("relaxed fixed-point guess over %.3g time units to %s", relax_time, y_start.tolist())
    else:
        y_start = y_ref.copy()

    W = conserved_directions(model, y_start)
    targets = W @ y_ref

    def residual(y: np.ndarray) -> np.ndarray:
        try:
            return np.concatenate([_balance(model, y), W @ y - targets])
        except ModelError as exc:
            raise FixedPointError(str(exc)) from exc

    def jac(y: np.ndarray, _f: np.ndarray) -> np.ndarray:
        return np.vstack([_balance_jacobian(model, y), W])

    result = damped_newton(residual, y_start, jacobian=jac, tol=tol, max_iter=max_iter)
    if not result.converged:
        raise FixedPointError(
            f"fixed point did not converge (residual {result.norm:.3e})",
            residual=result.norm,
            iterations=result.iterations,
        )
    d = model.d
    x_root = result.x[:d]
    if not _admissible(model, x_root):
        raise FixedPointError(
            f"fixed point converged to an inadmissible state x={x_root.tolist()}",
            residual=result.norm,
            iterations=result.iterations,
        )
    logger.info("fixed point x=%s u=%s (residual %.2e)", result.x[:d].tolist(), result.x[d:].tolist(), result.norm)
    return FixedPoint(
        x=result.x[:d],
        u=result.x[d:],
        residual=result.norm,
        iterations=result.iterations,
        conserved=W,
        history=result.history,
    )
