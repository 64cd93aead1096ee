"""
Exact simulation of the PDMP through the time-rescaled representation.

Each reaction alpha owns a residual unit-rate exponential clock E_alpha. The
slow variable u is integrated together with the cumulative intensities
Lambda_alpha(t) = int N lambda_alpha dt; reaction alpha fires when
Lambda_alpha reaches E_alpha. Between jumps x and z are frozen. When the model
has no slow variable the intensities are constant between jumps and the
crossing times are computed in closed form.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from pdmp_ldp.errors import IntegrationError, ModelError, SimulationError
from pdmp_ldp.export.csv_export import trajectory_frame
from pdmp_ldp.model.network import PDMPModel
from pdmp_ldp.model.state import HybridState, apply_reaction, snap_to_lattice
from pdmp_ldp.numerics.ode import DEFAULT_INTEGRATOR, IntegratorSettings, integrate
from pdmp_ldp.numerics.rng import generator_for

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT_INTERVALS = 512


@dataclass
class JumpPath:
    """Event list plus the right-continuous state sampled on a uniform grid."""

    event_times: np.ndarray
    event_reactions: np.ndarray
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    z: np.ndarray
    terminal: HybridState
    x0: np.ndarray
    scale: int
    seed: Optional[int] = None

    @property
    def horizon(self) -> float:
        return float(self.t[-1])

    @property
    def event_count(self) -> int:
        return int(self.event_times.size)

    def x_at_events(self, xi: np.ndarray) -> np.ndarray:
        """Concentrations right after each event, prefixed by x0; shape (K+1, d)."""
        steps = np.asarray(xi, dtype=float)[self.event_reactions] / self.scale
        return np.vstack([self.x0, self.x0 + np.cumsum(steps, axis=0)])

    def to_frame(self) -> pd.DataFrame:
        return trajectory_frame(self.t, self.x, self.u, self.z)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scale": self.scale,
            "seed": self.seed,
            "horizon": self.horizon,
            "event_count": self.event_count,
            "events": [
                {"t": float(t), "reaction": int(a)}
                for t, a in zip(self.event_times, self.event_reactions)
            ],
            "terminal": self.terminal.to_dict(),
        }


class _GridRecorder:
    """Writes the piecewise state onto the output grid as time advances."""

    def __init__(self, grid: np.ndarray, d: int, m: int, M: int):
        self.grid = grid
        self.x = np.empty((grid.size, d))
        self.u = np.empty((grid.size, m))
        self.z = np.empty((grid.size, M))
        self.next = 0

    def fill(self, state: HybridState, until: float, u_of_t: Callable[[float], np.ndarray], inclusive: bool) -> None:
        while self.next < self.grid.size:
            tk = self.grid[self.next]
            if tk > until or (not inclusive and tk >= until):
                break
            self.x[self.next] = state.x
            self.z[self.next] = state.z
            self.u[self.next] = u_of_t(tk)
            self.next += 1


def output_grid(T: float, output_step: Optional[float]) -> np.ndarray:
    if output_step is None:
        return np.linspace(0.0, T, DEFAULT_OUTPUT_INTERVALS + 1)
    n = max(1, int(round(T / output_step)))
    return np.linspace(0.0, T, n + 1)


def _threshold_event(index: int, offset: int, threshold: float) -> Callable[[float, np.ndarray], float]:
    def event(t: float, y: np.ndarray) -> float:
        return y[offset + index] - threshold

    event.terminal = True  # type: ignore[attr-defined]
    event.direction = 1  # type: ignore[attr-defined]
    return event


def simulate_pdmp(
    model: PDMPModel,
    T: float,
    seed: int,
    *,
    settings: IntegratorSettings = DEFAULT_INTEGRATOR,
    output_step: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
) -> JumpPath:
    """
    Draw one exact sample path on [0, T].

    The path is a deterministic function of (model, T, seed). x0 is snapped to
    the 1/N lattice before the first event.

    Raises:
        SimulationError: the drift or an intensity failed to evaluate, or the
            integrator could not advance; `t` is the failure time.
    """
    if T <= 0:
        raise ValueError("horizon T must be positive")
    rng = rng if rng is not None else generator_for(seed)
    net = model.network
    N, M, m = model.scale, net.M, model.m

    x_start = snap_to_lattice(model.x0, N)
    state = HybridState.initial(x_start, model.u0, M)
    recorder = _GridRecorder(output_grid(T, output_step), net.d, m, M)
    clocks = rng.exponential(size=M)
    event_times: List[float] = []
    event_reactions: List[int] = []

    def fire(alpha: int, at: HybridState) -> HybridState:
        event_times.append(at.t)
        event_reactions.append(alpha)
        clocks[alpha] = rng.exponential()
        try:
            return apply_reaction(at, net, alpha, N)
        except ModelError as exc:
            raise SimulationError(str(exc), t=at.t) from exc

    while True:
        # Clocks exhausted by rounding at the previous crossing fire immediately.
        due = np.flatnonzero(clocks <= 1e-15)
        if due.size:
            state = fire(int(due[0]), state)
            continue

        if m == 0:
            try:
                rates = N * net.rates(state.x, state.u)
            except ModelError as exc:
                raise SimulationError(str(exc), t=state.t) from exc
            with np.errstate(divide="ignore"):
                waits = np.where(rates > 0.0, clocks / np.where(rates > 0.0, rates, 1.0), np.inf)
            alpha = int(np.argmin(waits))
            dt = waits[alpha]
            frozen_u = state.u
            if state.t + dt > T:
                recorder.fill(state, T, lambda _t: frozen_u, inclusive=True)
                clocks -= rates * (T - state.t)
                state = state.with_time(T)
                break
            t_event = state.t + dt
            recorder.fill(state, t_event, lambda _t: frozen_u, inclusive=False)
            clocks -= rates * dt
            np.maximum(clocks, 0.0, out=clocks)
            state = fire(alpha, state.with_time(t_event))
            continue

        current = state

        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            u = y[:m]
            try:
                return np.concatenate([model.drift_at(u, current.x), N * net.rates(current.x, u)])
            except ModelError as exc:
                raise SimulationError(str(exc), t=t) from exc

        events = [_threshold_event(a, m, clocks[a]) for a in range(M)]
        y0 = np.concatenate([current.u, np.zeros(M)])
        try:
            sol = integrate(rhs, (current.t, T), y0, settings, events=events)
        except IntegrationError as exc:
            raise SimulationError(f"slow-flow integration failed: {exc}", t=exc.t) from exc

        def u_of_t(t: float, _sol=sol) -> np.ndarray:
            return _sol.sol(t)[:m]

        if sol.status != 1:
            recorder.fill(current, T, u_of_t, inclusive=True)
            y_end = sol.y[:, -1]
            clocks -= y_end[m:]
            state = current.with_time(T, y_end[:m])
            break

        candidates = [(float(te[0]), a) for a, te in enumerate(sol.t_events) if te.size]
        t_event, alpha = min(candidates)
        y_event = sol.y[:, -1]
        recorder.fill(current, t_event, u_of_t, inclusive=False)
        clocks -= y_event[m:]
        np.maximum(clocks, 0.0, out=clocks)
        state = fire(alpha, current.with_time(t_event, y_event[:m]))

    return JumpPath(
        event_times=np.asarray(event_times, dtype=float),
        event_reactions=np.asarray(event_reactions, dtype=int),
        t=recorder.grid,
        x=recorder.x,
        u=recorder.u,
        z=recorder.z,
        terminal=state,
        x0=x_start,
        scale=N,
        seed=seed,
    )
