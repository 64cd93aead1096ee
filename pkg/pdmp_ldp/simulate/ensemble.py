"""
Ensembles of independent PDMP trajectories.

Trajectory i always draws from the stream child_generator(master_seed, i), so
the report does not depend on worker count, chunking or executor kind.
Chunks return sufficient statistics that are merged in index order.
"""

from __future__ import annotations

import logging
import pickle
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from pdmp_ldp.errors import PdmpError, SimulationError
from pdmp_ldp.ldp.rate import INFINITE_ACTION, ActionValue, action_to_json
from pdmp_ldp.model.network import PDMPModel
from pdmp_ldp.numerics.ode import DEFAULT_INTEGRATOR, IntegratorSettings
from pdmp_ldp.numerics.rng import child_generator
from pdmp_ldp.simulate.events import Always, EventPredicate
from pdmp_ldp.simulate.pdmp import output_grid, simulate_pdmp

logger = logging.getLogger(__name__)

CHUNK_SIZE = 256


@dataclass
class _ChunkStats:
    count: int
    hits: int
    total: np.ndarray
    total_sq: np.ndarray

    def merge(self, other: "_ChunkStats") -> "_ChunkStats":
        return _ChunkStats(
            count=self.count + other.count,
            hits=self.hits + other.hits,
            total=self.total + other.total,
            total_sq=self.total_sq + other.total_sq,
        )


def _run_chunk(
    model: PDMPModel,
    T: float,
    master_seed: int,
    start: int,
    stop: int,
    predicate: EventPredicate,
    settings: IntegratorSettings,
    output_step: Optional[float],
) -> _ChunkStats:
    n_grid = output_grid(T, output_step).size
    width = model.d + model.m
    total = np.zeros((n_grid, width))
    total_sq = np.zeros((n_grid, width))
    hits = 0
    for i in range(start, stop):
        try:
            path = simulate_pdmp(
                model,
                T,
                i,
                settings=settings,
                output_step=output_step,
                rng=child_generator(master_seed, i),
            )
        except SimulationError as exc:
            raise SimulationError(str(exc), t=exc.t, trajectory=i) from exc
        state = np.hstack([path.x, path.u])
        total += state
        total_sq += state * state
        hits += int(bool(predicate(path)))
    return _ChunkStats(stop - start, hits, total, total_sq)


@dataclass
class EnsembleReport:
    """Aggregated statistics of an ensemble on the shared output grid."""

    count: int
    hits: int
    scale: int
    t: np.ndarray
    mean_x: np.ndarray
    mean_u: np.ndarray
    var_x: np.ndarray
    var_u: np.ndarray
    master_seed: int

    @property
    def probability(self) -> float:
        return self.hits / self.count

    @property
    def minus_log_p_over_n(self) -> ActionValue:
        """-(1/N) log P, or the infinite sentinel when no trajectory hit."""
        if self.hits == 0:
            return INFINITE_ACTION
        return float(-np.log(self.probability) / self.scale)

    def stderr_x(self) -> np.ndarray:
        return np.sqrt(self.var_x / self.count)

    def stderr_u(self) -> np.ndarray:
        return np.sqrt(self.var_u / self.count)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "count": self.count,
            "hits": self.hits,
            "scale": self.scale,
            "master_seed": self.master_seed,
            "probability": self.probability,
            "minus_log_p_over_n": action_to_json(self.minus_log_p_over_n),
            "t": self.t.tolist(),
            "mean_x": self.mean_x.tolist(),
            "mean_u": self.mean_u.tolist(),
            "var_x": self.var_x.tolist(),
            "var_u": self.var_u.tolist(),
        }


def _picklable(*objects: Any) -> bool:
    try:
        pickle.dumps(objects)
    except Exception:  # noqa: BLE001 - any pickling failure means "use threads"
        return False
    return True


def _make_executor(kind: str, workers: int, payload: tuple) -> Executor:
    if kind == "process":
        if _picklable(*payload):
            return ProcessPoolExecutor(max_workers=workers)
        logger.warning("model or predicate cannot be pickled; falling back to threads")
    return ThreadPoolExecutor(max_workers=workers)


def simulate_ensemble(
    model: PDMPModel,
    T: float,
    count: int,
    master_seed: int,
    event_predicate: Optional[EventPredicate] = None,
    *,
    workers: int = 1,
    executor: str = "thread",
    settings: IntegratorSettings = DEFAULT_INTEGRATOR,
    output_step: Optional[float] = None,
    chunk_size: int = CHUNK_SIZE,
) -> EnsembleReport:
    """
    Simulate `count` trajectories and aggregate them.

    Raises:
        SimulationError: the failure of the lowest-indexed trajectory that
            failed, with `trajectory` set.
    """
    if count < 1:
        raise ValueError("ensemble count must be >= 1")
    predicate = event_predicate if event_predicate is not None else Always(True)
    bounds = [(s, min(s + chunk_size, count)) for s in range(0, count, chunk_size)]
    args = (model, T, master_seed)
    tail = (predicate, settings, output_step)

    if workers <= 1 or len(bounds) == 1:
        parts = [_run_chunk(*args, s, e, *tail) for s, e in bounds]
    else:
        with _make_executor(executor, workers, (model, predicate)) as pool:
            futures = [pool.submit(_run_chunk, *args, s, e, *tail) for s, e in bounds]
            parts: List[_ChunkStats] = []
            try:
                for fut in futures:
                    parts.append(fut.result())
            except PdmpError:
                for fut in futures:
                    fut.cancel()
                raise

    stats = parts[0]
    for part in parts[1:]:
        stats = stats.merge(part)

    n = stats.count
    mean = stats.total / n
    var = np.maximum(stats.total_sq / n - mean * mean, 0.0) * (n / (n - 1) if n > 1 else 0.0)
    d = model.d
    logger.info("ensemble of %d trajectories at N=%d: %d hits", n, model.scale, stats.hits)
    return EnsembleReport(
        count=n,
        hits=stats.hits,
        scale=model.scale,
        t=output_grid(T, output_step),
        mean_x=mean[:, :d],
        mean_u=mean[:, d:],
        var_x=var[:, :d],
        var_u=var[:, d:],
        master_seed=master_seed,
    )
