"""Damped Newton iteration with backtracking on the residual norm."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from pdmp_ldp.errors import PdmpError
from pdmp_ldp.numerics.differentiation import jacobian as fd_jacobian

logger = logging.getLogger(__name__)


@dataclass
class NewtonResult:
    x: np.ndarray
    residual: np.ndarray
    norm: float
    iterations: int
    converged: bool
    history: List[Dict[str, Any]] = field(default_factory=list)


def forward_jacobian(
    fun: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    f0: np.ndarray,
    step: float = 1e-7,
) -> np.ndarray:
    """One-sided finite-difference Jacobian reusing the residual at x."""
    out = np.empty((f0.size, x.size))
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        xp = x.copy()
        xp[i] += h
        out[:, i] = (fun(xp) - f0) / h
    return out


def damped_newton(
    fun: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    *,
    jacobian: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
    tol: float = 1e-10,
    max_iter: int = 50,
    max_halvings: int = 30,
    central: bool = False,
) -> NewtonResult:
    """
    Solve fun(x) = 0.

    Steps come from a least-squares solve, so square-singular and
    overdetermined systems are handled. A step is halved until the residual
    norm decreases; a residual evaluation that raises PdmpError counts as a
    failed trial point.

    Args:
        fun: residual map.
        x0: starting point.
        jacobian: optional (x, f(x)) -> J. Finite differences otherwise.
        tol: convergence threshold on the max-norm of the residual.
        central: use central rather than forward differences.
    """
    x = np.array(x0, dtype=float)
    f = np.asarray(fun(x), dtype=float)
    norm = float(np.max(np.abs(f))) if f.size else 0.0
    history: List[Dict[str, Any]] = [{"iteration": 0, "norm": norm, "step": 0.0}]
    if norm <= tol:
        return NewtonResult(x, f, norm, 0, True, history)

    for it in range(1, max_iter + 1):
        if jacobian is not None:
            jac = jacobian(x, f)
        elif central:
            jac = fd_jacobian(fun, x)
        else:
            jac = forward_jacobian(fun, x, f)
        delta, *_ = np.linalg.lstsq(jac, -f, rcond=None)

        scale = 1.0
        accepted = False
        for _ in range(max_halvings):
            trial = x + scale * delta
            try:
                f_trial = np.asarray(fun(trial), dtype=float)
                trial_norm = float(np.max(np.abs(f_trial)))
            except PdmpError as exc:
                logger.debug("newton trial failed at scale %.3g: %s", scale, exc)
                trial_norm = np.inf
            if np.isfinite(trial_norm) and trial_norm < norm:
                accepted = True
                break
            scale *= 0.5

        if not accepted:
            logger.debug("newton stalled at iteration %d, norm %.3e", it, norm)
            return NewtonResult(x, f, norm, it, False, history)

        x, f, norm = trial, f_trial, trial_norm
        history.append({"iteration": it, "norm": norm, "step": scale})
        logger.debug("newton iteration %d: norm %.3e (step %.3g)", it, norm, scale)
        if norm <= tol:
            return NewtonResult(x, f, norm, it, True, history)

    return NewtonResult(x, f, norm, max_iter, False, history)
