"""
ODE integration with method fallback.

All deterministic flows in the package (slow drift between jumps, fluid limit,
Euler-Lagrange shooting) go through `integrate`, which wraps
`scipy.integrate.solve_ivp` and retries a failed solve with the next method in
the chain.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from pdmp_ldp.errors import IntegrationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntegratorSettings:
    """Tolerances and fallback chain for the embedded Runge-Kutta integrator."""

    rtol: float = 1e-8
    atol: float = 1e-10
    methods: Sequence[str] = ("RK45", "DOP853", "Radau")
    max_step: float = np.inf

    def tighter(self, rtol: float, atol: float) -> "IntegratorSettings":
        return replace(self, rtol=rtol, atol=atol)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rtol": self.rtol,
            "atol": self.atol,
            "methods": list(self.methods),
            "max_step": None if np.isinf(self.max_step) else self.max_step,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "IntegratorSettings":
        max_step = data.get("max_step")
        return cls(
            rtol=float(data.get("rtol", 1e-8)),
            atol=float(data.get("atol", 1e-10)),
            methods=tuple(data.get("methods", ("RK45", "DOP853", "Radau"))),
            max_step=np.inf if max_step is None else float(max_step),
        )


DEFAULT_INTEGRATOR = IntegratorSettings()
SHOOTING_INTEGRATOR = IntegratorSettings(rtol=1e-10, atol=1e-12)


def _solve_once(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t_span: tuple[float, float],
    y0: np.ndarray,
    settings: IntegratorSettings,
    method: str,
    events: Optional[Sequence[Callable]],
    dense_output: bool,
    t_eval: Optional[np.ndarray],
):
    sol = solve_ivp(
        fun,
        t_span,
        y0,
        method=method,
        rtol=settings.rtol,
        atol=settings.atol,
        max_step=settings.max_step,
        events=events,
        dense_output=dense_output,
        t_eval=t_eval,
    )
    if sol.status == -1 or not np.all(np.isfinite(sol.y)):
        t_fail = float(sol.t[-1]) if sol.t.size else float(t_span[0])
        raise IntegrationError(f"{method} failed: {sol.message}", t=t_fail, method=method)
    return sol


def integrate(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t_span: tuple[float, float],
    y0: np.ndarray,
    settings: IntegratorSettings = DEFAULT_INTEGRATOR,
    *,
    events: Optional[Sequence[Callable]] = None,
    dense_output: bool = True,
    t_eval: Optional[np.ndarray] = None,
):
    """
    Integrate y' = fun(t, y) over t_span, falling back through settings.methods.

    Exceptions raised by `fun` itself propagate unchanged; only integrator
    breakdowns (step-size underflow, non-finite state) trigger the fallback.

    Raises:
        IntegrationError: if every method in the chain fails. `t` carries the
            furthest time the last attempt reached.
    """
    methods = list(settings.methods)
    y0 = np.asarray(y0, dtype=float)
    for attempt in Retrying(
        stop=stop_after_attempt(len(methods)),
        retry=retry_if_exception_type(IntegrationError),
        reraise=True,
    ):
        with attempt:
            method = methods[attempt.retry_state.attempt_number - 1]
            if attempt.retry_state.attempt_number > 1:
                logger.warning("retrying integration on %s with %s", t_span, method)
            return _solve_once(fun, t_span, y0, settings, method, events, dense_output, t_eval)
    raise IntegrationError("no integration method configured", t=float(t_span[0]))
