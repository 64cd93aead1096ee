"""
Shooting solution of the Euler-Lagrange boundary-value problem.

Unknowns at t = 0 are (xdot(0), eta(0)) in contracted form or
(zdot(0), eta(0)) in flux form; the terminal constraints are x(T) = x_target
(or z(T) = z_target) and eta(T) = 0. The horizon is split into segments
whose start states are extra unknowns, with continuity of the state at every
segment boundary. Newton runs from a collocation start or a grid of starts
and the converged solution with the lowest action wins.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid

from pdmp_ldp.errors import BVPError, IntegrationError, ModelError, PdmpError, ShootingError
from pdmp_ldp.export.csv_export import trajectory_frame
from pdmp_ldp.ldp.contracted import contracted_derivatives
from pdmp_ldp.ldp.paths import SmoothPath
from pdmp_ldp.model.network import PDMPModel
from pdmp_ldp.numerics.arrays import as_columns
from pdmp_ldp.numerics.newton import damped_newton
from pdmp_ldp.numerics.ode import SHOOTING_INTEGRATOR, IntegratorSettings, integrate
from pdmp_ldp.optimal_path.euler_lagrange import ELState, assemble_contracted_el_rhs, assemble_flux_el_rhs

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShootingSettings:
    integrator: IntegratorSettings = SHOOTING_INTEGRATOR
    newton_tol: float = 1e-8
    max_iter: int = 40
    xdot_scales: Sequence[float] = (0.5, 1.0, 2.0)
    eta_offsets: Sequence[float] = (0.0, 0.1, -0.1)
    output_intervals: int = 2048
    workers: int = 1
    # Multiple-shooting segments; 1 is single shooting.
    segments: int = 10
    # Collocation nodes for an extra start read off a discrete minimizer; 0 disables.
    collocation_seed: int = 128

    def to_dict(self) -> Dict[str, Any]:
        return {
            "integrator": self.integrator.to_dict(),
            "newton_tol": self.newton_tol,
            "max_iter": self.max_iter,
            "xdot_scales": list(self.xdot_scales),
            "eta_offsets": list(self.eta_offsets),
            "output_intervals": self.output_intervals,
            "workers": self.workers,
            "segments": self.segments,
            "collocation_seed": self.collocation_seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any] | None) -> "ShootingSettings":
        data = data or {}
        base = cls()
        return cls(
            integrator=IntegratorSettings.from_dict(data["integrator"]) if "integrator" in data else base.integrator,
            newton_tol=float(data.get("newton_tol", base.newton_tol)),
            max_iter=int(data.get("max_iter", base.max_iter)),
            xdot_scales=tuple(float(v) for v in data.get("xdot_scales", base.xdot_scales)),
            eta_offsets=tuple(float(v) for v in data.get("eta_offsets", base.eta_offsets)),
            output_intervals=int(data.get("output_intervals", base.output_intervals)),
            workers=int(data.get("workers", base.workers)),
            segments=int(data.get("segments", base.segments)),
            collocation_seed=int(data.get("collocation_seed", base.collocation_seed)),
        )


@dataclass(frozen=True, eq=False)
class ShootingProblem:
    """
    Fixed-horizon two-point problem. Exactly one of x_target (contracted
    form) or z_target (flux form) is set.
    """

    model: PDMPModel
    T: float
    x_target: Optional[np.ndarray] = None
    z_target: Optional[np.ndarray] = None
    settings: ShootingSettings = field(default_factory=ShootingSettings)

    def __post_init__(self) -> None:
        if self.T <= 0:
            raise ValueError("horizon T must be positive")
        if (self.x_target is None) == (self.z_target is None):
            raise ValueError("set exactly one of x_target or z_target")
        if self.x_target is not None:
            target = np.atleast_1d(np.asarray(self.x_target, dtype=float))
            if target.size != self.model.d:
                raise ValueError(f"x_target has {target.size} entries, expected d={self.model.d}")
            object.__setattr__(self, "x_target", target)
        else:
            target = np.atleast_1d(np.asarray(self.z_target, dtype=float))
            if target.size != self.model.M:
                raise ValueError(f"z_target has {target.size} entries, expected M={self.model.M}")
            object.__setattr__(self, "z_target", target)

    @property
    def form(self) -> str:
        return "contracted" if self.x_target is not None else "flux"

    @property
    def unknowns(self) -> int:
        lead = self.model.d if self.form == "contracted" else self.model.M
        return lead + self.model.m

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model.name,
            "model_metadata": self.model.metadata,
            "x0": self.model.x0.tolist(),
            "u0": self.model.u0.tolist(),
            "T": self.T,
            "form": self.form,
            "target": (self.x_target if self.x_target is not None else self.z_target).tolist(),
            "settings": self.settings.to_dict(),
        }


def _rhs(problem: ShootingProblem):
    model = problem.model
    d, m, M = model.d, model.m, model.M

    if problem.form == "contracted":

        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            state = ELState(t=t, x=y[:d], xdot=y[d : 2 * d], u=y[2 * d : 2 * d + m], eta=y[2 * d + m : 2 * d + 2 * m])
            try:
                out = assemble_contracted_el_rhs(state, model)
            except (PdmpError, np.linalg.LinAlgError) as exc:
                raise ShootingError(f"Euler-Lagrange flow broke down: {exc}", escape_time=float(t)) from exc
            return np.concatenate([out.xdot, out.xddot, out.udot, out.etadot, [out.lagrangian]])

        return rhs

    x0 = model.x0

    def flux_rhs(t: float, y: np.ndarray) -> np.ndarray:
        state = ELState.from_fluxes(model, t, y[:M], y[M : 2 * M], y[2 * M : 2 * M + m], y[2 * M + m : 2 * M + 2 * m], x0)
        try:
            out = assemble_flux_el_rhs(state, model)
        except (PdmpError, np.linalg.LinAlgError) as exc:
            raise ShootingError(f"flux Euler-Lagrange flow broke down: {exc}", escape_time=float(t)) from exc
        return np.concatenate([out.zdot, out.zddot, out.udot, out.etadot, [out.lagrangian]])

    return flux_rhs


def _initial_state(problem: ShootingProblem, guess: np.ndarray) -> np.ndarray:
    model = problem.model
    lead = model.d if problem.form == "contracted" else model.M
    start = model.x0 if problem.form == "contracted" else np.zeros(model.M)
    velocity, eta = guess[:lead], guess[lead:]
    return np.concatenate([start, velocity, model.u0, eta, [0.0]])


def _integrate_segment(
    problem: ShootingProblem,
    y_start: np.ndarray,
    span: Tuple[float, float],
    t_eval: Optional[np.ndarray] = None,
):
    """Euler-Lagrange flow from y_start (without the action column) over span; the action restarts at 0."""
    y0 = np.concatenate([y_start, [0.0]])
    try:
        return integrate(_rhs(problem), span, y0, problem.settings.integrator, dense_output=False, t_eval=t_eval)
    except IntegrationError as exc:
        raise ShootingError(f"Euler-Lagrange integration failed: {exc}", escape_time=exc.t) from exc
    except ModelError as exc:
        raise ShootingError(f"model evaluation failed: {exc}", escape_time=None) from exc


def _integrate_el(problem: ShootingProblem, guess: np.ndarray, t_eval: Optional[np.ndarray] = None):
    guess = np.asarray(guess, dtype=float)
    if guess.size != problem.unknowns or not np.all(np.isfinite(guess)):
        raise ShootingError("shooting guess must be finite with one entry per unknown", escape_time=0.0)
    return _integrate_segment(problem, _initial_state(problem, guess)[:-1], (0.0, problem.T), t_eval)


def shoot(problem: ShootingProblem, guess: np.ndarray) -> np.ndarray:
    """
    Single-shooting terminal residual (x(T) - x_target, eta(T)) or
    (z(T) - z_target, eta(T)) over the whole horizon.

    Raises:
        ShootingError: the flow could not be integrated to T; `escape_time`
            is where it broke down.
    """
    sol = _integrate_el(problem, guess)
    y_end = sol.y[:, -1]
    model = problem.model
    lead = model.d if problem.form == "contracted" else model.M
    target = problem.x_target if problem.form == "contracted" else problem.z_target
    eta_end = y_end[2 * lead + model.m : 2 * lead + 2 * model.m]
    return np.concatenate([y_end[:lead] - target, eta_end])


class SegmentedResidual:
    """
    Multiple-shooting system on `settings.segments` equal segments.

    The unknowns are the free start values (velocity and eta at t = 0)
    followed by the full Euler-Lagrange state at every interior segment
    start. Residuals are the continuity gaps between consecutive segments
    and the terminal constraints. One segment is plain single shooting.
    """

    def __init__(self, problem: ShootingProblem):
        model = problem.model
        self.problem = problem
        self.times = np.linspace(0.0, problem.T, max(1, problem.settings.segments) + 1)
        self.segments = self.times.size - 1
        self.lead = model.d if problem.form == "contracted" else model.M
        self.size = 2 * self.lead + 2 * model.m
        eta = np.arange(2 * self.lead + model.m, self.size)
        self.free = np.concatenate([np.arange(self.lead, 2 * self.lead), eta])
        self.terminal = np.concatenate([np.arange(self.lead), eta])
        target = problem.x_target if problem.form == "contracted" else problem.z_target
        self.target = np.concatenate([target, np.zeros(model.m)])
        self.start = _initial_state(problem, np.zeros(problem.unknowns))[:-1]

    def nodes(self, w: np.ndarray) -> np.ndarray:
        nodes = np.empty((self.segments, self.size))
        nodes[0] = self.start
        nodes[0, self.free] = w[: self.free.size]
        nodes[1:] = np.reshape(w[self.free.size :], (self.segments - 1, self.size))
        return nodes

    def pack(self, nodes: np.ndarray) -> np.ndarray:
        return np.concatenate([nodes[0, self.free], nodes[1:].reshape(-1)])

    def end(self, k: int, y: np.ndarray) -> np.ndarray:
        sol = _integrate_segment(self.problem, y, (self.times[k], self.times[k + 1]))
        return sol.y[: self.size, -1]

    def _gap(self, k: int, end: np.ndarray, nodes: np.ndarray) -> np.ndarray:
        if k < self.segments - 1:
            return end - nodes[k + 1]
        return end[self.terminal] - self.target

    def __call__(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if not np.all(np.isfinite(w)):
            raise ShootingError("shooting nodes must be finite", escape_time=0.0)
        nodes = self.nodes(w)
        return np.concatenate([self._gap(k, self.end(k, nodes[k]), nodes) for k in range(self.segments)])

    def jacobian(self, w: np.ndarray, f: np.ndarray, step: float = 1e-7) -> np.ndarray:
        """Forward differences segment by segment; each column re-integrates one segment."""
        nodes = self.nodes(np.asarray(w, dtype=float))
        jac = np.zeros((f.size, w.size))
        nfree = self.free.size
        for k in range(self.segments):
            base = self.end(k, nodes[k])
            row = k * self.size
            cols = self.free if k == 0 else np.arange(self.size)
            col0 = 0 if k == 0 else nfree + (k - 1) * self.size
            for c, idx in enumerate(cols):
                h = step * max(1.0, abs(nodes[k, idx]))
                y = nodes[k].copy()
                y[idx] += h
                diff = (self.end(k, y) - base) / h
                if k < self.segments - 1:
                    jac[row : row + self.size, col0 + c] = diff
                else:
                    jac[row:, col0 + c] = diff[self.terminal]
            if k < self.segments - 1:
                nxt = nfree + k * self.size
                jac[row : row + self.size, nxt : nxt + self.size] -= np.eye(self.size)
        return jac

    def chopped(self, guess: np.ndarray) -> np.ndarray:
        """Nodes from following the flow forward out of a single-shooting guess."""
        guess = np.asarray(guess, dtype=float)
        if guess.size != self.free.size or not np.all(np.isfinite(guess)):
            raise ShootingError("shooting guess must be finite with one entry per unknown", escape_time=0.0)
        nodes = np.empty((self.segments, self.size))
        nodes[0] = self.start
        nodes[0, self.free] = guess
        for k in range(1, self.segments):
            try:
                nodes[k] = self.end(k - 1, nodes[k - 1])
            except ShootingError as exc:
                logger.debug("start guess left the domain in segment %d: %s", k - 1, exc)
                nodes[k:] = nodes[k - 1]
                break
        return nodes


@dataclass
class OptimalTrajectory:
    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    u: np.ndarray
    eta: np.ndarray
    zdot: np.ndarray
    action: float
    residual_norm: float
    iterations: int
    start_index: int
    unknowns: np.ndarray
    form: str = "contracted"
    history: List[Dict[str, Any]] = field(default_factory=list)
    starts: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def eta_terminal(self) -> np.ndarray:
        return self.eta[-1]

    def smooth_path(self) -> SmoothPath:
        """Fluxes integrated from the optimal zdot; x is taken from the trajectory."""
        z = cumulative_trapezoid(self.zdot, self.t, axis=0, initial=0.0)
        return SmoothPath(t=self.t, z=np.maximum.accumulate(z, axis=0), x=self.x, u=self.u)

    def to_frame(self) -> pd.DataFrame:
        return trajectory_frame(self.t, self.x, self.u, extra={"eta": self.eta, "zdot": self.zdot, "xdot": self.xdot})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "form": self.form,
            "action": self.action,
            "residual_norm": self.residual_norm,
            "eta_terminal": self.eta_terminal.tolist(),
            "iterations": self.iterations,
            "start_index": self.start_index,
            "unknowns": self.unknowns.tolist(),
            "history": self.history,
            "starts": self.starts,
        }

    def to_record(self) -> Dict[str, Any]:
        """Full state, including arrays, for caching."""
        record = self.to_dict()
        record.update({k: getattr(self, k).tolist() for k in ("t", "x", "xdot", "u", "eta", "zdot")})
        return record

    @classmethod
    def from_record(cls, data: Dict[str, Any]) -> "OptimalTrajectory":
        n = len(data["t"])
        arrays = {k: as_columns(data[k], n) for k in ("x", "xdot", "u", "eta", "zdot")}
        return cls(
            t=np.asarray(data["t"], dtype=float),
            action=float(data["action"]),
            residual_norm=float(data["residual_norm"]),
            iterations=int(data["iterations"]),
            start_index=int(data["start_index"]),
            unknowns=np.asarray(data["unknowns"], dtype=float),
            form=str(data.get("form", "contracted")),
            history=list(data.get("history", [])),
            starts=list(data.get("starts", [])),
            **arrays,
        )


def _eta_variants(m: int, offsets: Sequence[float]) -> List[np.ndarray]:
    variants = [offset * np.ones(m) for offset in offsets]
    if m > 1:
        for offset in offsets:
            if offset == 0.0:
                continue
            for j in range(m):
                single = np.zeros(m)
                single[j] = offset
                variants.append(single)
    return variants


def start_grid(problem: ShootingProblem) -> List[np.ndarray]:
    """
    Initial guesses: base velocity times each scale, crossed with eta(0)
    equal to each offset in every component and, when m > 1, each nonzero
    offset in one component at a time.

    The base velocity is the deterministic drift at the start, or the
    straight-line velocity to the target when the drift vanishes.
    """
    model = problem.model
    s = problem.settings
    if problem.form == "contracted":
        base = model.mean_drift(model.x0, model.u0)
        if np.max(np.abs(base)) <= 1e-8:
            base = (problem.x_target - model.x0) / problem.T
    else:
        base = model.network.rates(model.x0, model.u0)
        if np.max(np.abs(base)) <= 1e-8:
            base = problem.z_target / problem.T
    # Offsets only differ in eta; keep one start per scale when m = 0.
    etas = _eta_variants(model.m, s.eta_offsets) if model.m else [np.zeros(0)]
    return [np.concatenate([scale * base, eta]) for scale in s.xdot_scales for eta in etas]


def collocation_nodes(problem: ShootingProblem, residual: Optional[SegmentedResidual] = None) -> Optional[np.ndarray]:
    """
    Multiple-shooting nodes read off a direct minimization of the
    discretized action: x, xdot and u from the discrete path, eta from the
    action's sensitivity to u along it. None when disabled, inapplicable or
    unsuccessful.
    """
    nodes = problem.settings.collocation_seed
    if nodes < 2 or problem.form != "contracted" or problem.model.m == 0:
        return None
    from pdmp_ldp.optimal_path.collocation import INFEASIBLE_PENALTY, collocation_minimize

    try:
        result = collocation_minimize(problem, nodes)
    except (PdmpError, ValueError) as exc:
        logger.info("collocation start unavailable: %s", exc)
        return None
    if result.action >= INFEASIBLE_PENALTY:
        logger.info("collocation start unavailable: %s", result.message)
        return None
    residual = residual or SegmentedResidual(problem)
    times = residual.times[:-1]
    columns = [result.x, result.xdot, result.u, result.eta]
    seeded = np.column_stack(
        [np.interp(times, result.t, col[:, j]) for col in columns for j in range(col.shape[1])]
    )
    fixed = np.setdiff1d(np.arange(residual.size), residual.free)
    seeded[0, fixed] = residual.start[fixed]
    if not np.all(np.isfinite(seeded)):
        return None
    logger.info("collocation start: action %.6g, guess %s", result.action, seeded[0, residual.free].tolist())
    return seeded


def _trajectory(problem: ShootingProblem, residual: SegmentedResidual, w: np.ndarray, newton: Any, index: int) -> OptimalTrajectory:
    model = problem.model
    d, m = model.d, model.m
    t = np.linspace(0.0, problem.T, problem.settings.output_intervals + 1)
    nodes = residual.nodes(w)
    blocks = []
    action = 0.0
    for k in range(residual.segments):
        a, b = residual.times[k], residual.times[k + 1]
        last = k == residual.segments - 1
        mask = (t >= a) & ((t <= b) if last else (t < b))
        count = int(mask.sum())
        sol = _integrate_segment(problem, nodes[k], (a, b), t_eval=np.unique(np.append(t[mask], b)))
        block = sol.y.T[:count].copy()
        block[:, -1] += action
        action += float(sol.y[-1, -1])
        blocks.append(block)
    y = np.vstack(blocks)
    if problem.form == "contracted":
        x, xdot = y[:, :d], y[:, d : 2 * d]
        u, eta = y[:, 2 * d : 2 * d + m], y[:, 2 * d + m : 2 * d + 2 * m]
        zdot = np.array([contracted_derivatives(v, xx, uu, model).zdot for v, xx, uu in zip(xdot, x, u)])
    else:
        M = model.M
        z, zdot = y[:, :M], y[:, M : 2 * M]
        u, eta = y[:, 2 * M : 2 * M + m], y[:, 2 * M + m : 2 * M + 2 * m]
        x = model.x0 + z @ model.network.xi
        xdot = zdot @ model.network.xi
    return OptimalTrajectory(
        t=t,
        x=x,
        xdot=xdot,
        u=u,
        eta=eta,
        zdot=zdot,
        action=max(action, 0.0),
        residual_norm=float(newton.norm),
        iterations=int(newton.iterations),
        start_index=index,
        unknowns=nodes[0, residual.free].copy(),
        form=problem.form,
        history=list(newton.history),
    )


def _run_start(problem: ShootingProblem, residual: SegmentedResidual, index: int, start: np.ndarray) -> Dict[str, Any]:
    """Newton from one start: a single-shooting guess (1-D) or a full node array (2-D)."""
    start = np.asarray(start, dtype=float)
    guess = start if start.ndim == 1 else start[0, residual.free]
    record: Dict[str, Any] = {"index": index, "guess": guess.tolist()}
    try:
        nodes = residual.chopped(start) if start.ndim == 1 else start
        result = damped_newton(
            residual,
            residual.pack(nodes),
            jacobian=residual.jacobian,
            tol=problem.settings.newton_tol,
            max_iter=problem.settings.max_iter,
        )
    except PdmpError as exc:
        record.update({"converged": False, "error": exc.to_dict()})
        return record
    record.update({"converged": bool(result.converged), "residual": result.norm, "iterations": result.iterations})
    if not result.converged:
        return record
    try:
        record["trajectory"] = _trajectory(problem, residual, result.x, result, index)
    except PdmpError as exc:
        record.update({"converged": False, "error": exc.to_dict()})
        return record
    record["action"] = record["trajectory"].action
    return record


def _run_all(problem: ShootingProblem, residual: SegmentedResidual, starts: List[np.ndarray], first: int = 0):
    workers = max(1, problem.settings.workers)
    indexed = list(enumerate(starts, start=first))
    if workers == 1:
        return [_run_start(problem, residual, i, nodes) for i, nodes in indexed]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda item: _run_start(problem, residual, *item), indexed))


def solve_bvp(problem: ShootingProblem, *, starts: Optional[Sequence[np.ndarray]] = None) -> OptimalTrajectory:
    """
    Damped Newton on the multiple-shooting residual from every start; the
    converged solution with the lowest action is returned, ties going to the
    lowest start index.

    Each start is a single-shooting guess (xdot(0) or zdot(0), eta(0)) and is
    spread over the segments by following the flow. Without explicit
    `starts`, the collocation start (when `settings.collocation_seed`
    allows one) is tried first as start 0; if it converges it is returned
    directly, otherwise the `start_grid` starts follow.

    Raises:
        BVPError: no start converged; `starts` carries each start's outcome.
    """
    residual = SegmentedResidual(problem)
    records: List[Dict[str, Any]] = []
    if starts is None:
        seeded = collocation_nodes(problem, residual)
        if seeded is not None:
            records = _run_all(problem, residual, [seeded])
        if not any(r.get("converged") for r in records):
            records += _run_all(problem, residual, start_grid(problem), first=len(records))
    else:
        records = _run_all(problem, residual, list(starts))

    diagnostics = [{k: v for k, v in r.items() if k != "trajectory"} for r in records]
    winners = [r for r in records if r.get("converged")]
    for r in diagnostics:
        logger.info("shooting start %d: converged=%s residual=%s", r["index"], r["converged"], r.get("residual"))
    if not winners:
        raise BVPError("no shooting start converged", starts=diagnostics)

    best = min(winners, key=lambda r: (r["action"], r["index"]))
    trajectory: OptimalTrajectory = best["trajectory"]
    trajectory.starts = diagnostics
    logger.info("optimal action %.10g from start %d", trajectory.action, trajectory.start_index)
    return trajectory
