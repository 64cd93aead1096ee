"""Central finite differences for callables without registered derivatives."""

from __future__ import annotations

from typing import Callable

import numpy as np

DEFAULT_STEP = 1e-6


def _steps(point: np.ndarray, step: float) -> np.ndarray:
    return step * np.maximum(1.0, np.abs(point))


def gradient(fun: Callable[[np.ndarray], float], point: np.ndarray, step: float = DEFAULT_STEP) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    point = np.asarray(point, dtype=float)
    h = _steps(point, step)
    out = np.empty_like(point)
    for i in range(point.size):
        e = np.zeros_like(point)
        e[i] = h[i]
        out[i] = (fun(point + e) - fun(point - e)) / (2.0 * h[i])
    return out


def jacobian(
    fun: Callable[[np.ndarray], np.ndarray],
    point: np.ndarray,
    step: float = DEFAULT_STEP,
) -> np.ndarray:
    """Central-difference Jacobian, shape (len(fun(point)), len(point))."""
    point = np.asarray(point, dtype=float)
    f0 = np.atleast_1d(np.asarray(fun(point), dtype=float))
    h = _steps(point, step)
    out = np.empty((f0.size, point.size))
    for i in range(point.size):
        e = np.zeros_like(point)
        e[i] = h[i]
        fp = np.atleast_1d(np.asarray(fun(point + e), dtype=float))
        fm = np.atleast_1d(np.asarray(fun(point - e), dtype=float))
        out[:, i] = (fp - fm) / (2.0 * h[i])
    return out


def hessian(fun: Callable[[np.ndarray], float], point: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Second-order central-difference Hessian of a scalar function."""
    point = np.asarray(point, dtype=float)
    n = point.size
    h = _steps(point, step)
    f0 = fun(point)
    out = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        out[i, i] = (fun(point + ei) - 2.0 * f0 + fun(point - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            val = (
                fun(point + ei + ej)
                - fun(point + ei - ej)
                - fun(point - ei + ej)
                + fun(point - ei - ej)
            ) / (4.0 * h[i] * h[j])
            out[i, j] = out[j, i] = val
    return out
