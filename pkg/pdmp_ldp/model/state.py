from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from pdmp_ldp.errors import InvariantViolationError
from pdmp_ldp.model.network import ReactionNetwork

logger = logging.getLogger(__name__)

# Entries within this distance of the 1/N lattice are treated as lattice points.
_LATTICE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HybridState:
    """Snapshot (t, z, x, u) of a hybrid trajectory; z holds counts divided by N."""

    t: float
    z: np.ndarray
    x: np.ndarray
    u: np.ndarray

    @classmethod
    def initial(cls, x0: np.ndarray, u0: np.ndarray, M: int, t: float = 0.0) -> "HybridState":
        return cls(
            t=float(t),
            z=np.zeros(M),
            x=np.array(x0, dtype=float),
            u=np.array(u0, dtype=float),
        )

    def with_time(self, t: float, u: np.ndarray | None = None) -> "HybridState":
        return HybridState(t=float(t), z=self.z, x=self.x, u=self.u if u is None else np.asarray(u, dtype=float))

    def constraint_defect(self, x0: np.ndarray, net: ReactionNetwork) -> float:
        """max |x - x0 - sum_alpha z_alpha xi_alpha|."""
        return float(np.max(np.abs(self.x - x0 - net.xi.T @ self.z)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "z": self.z.tolist(),
            "x": self.x.tolist(),
            "u": self.u.tolist(),
        }


def on_lattice(values: np.ndarray, scale: int) -> bool:
    scaled = np.asarray(values, dtype=float) * scale
    return bool(np.all(np.abs(scaled - np.round(scaled)) <= _LATTICE_TOL * max(1, scale)))


def snap_to_lattice(x0: np.ndarray, scale: int) -> np.ndarray:
    """Round an initial concentration to the nearest point of the N^-1 Z^d lattice."""
    x0 = np.asarray(x0, dtype=float)
    snapped = np.round(x0 * scale) / scale
    if not np.array_equal(snapped, x0):
        logger.info("snapped x0 %s to lattice point %s at N=%d", x0.tolist(), snapped.tolist(), scale)
    return snapped


def apply_reaction(state: HybridState, net: ReactionNetwork, alpha: int, scale: int) -> HybridState:
    """
    Fire reaction `alpha` once: z_alpha += 1/N and x += xi_alpha / N.

    States on the 1/N lattice stay exactly on it, so boundary guards such as
    lambda(x = 1) = 0 see exact values.

    Raises:
        InvariantViolationError: if the new state has a negative concentration.
    """
    z = state.z.copy()
    counts = z[alpha] * scale
    if abs(counts - round(counts)) <= _LATTICE_TOL * scale:
        z[alpha] = (round(counts) + 1) / scale
    else:
        z[alpha] += 1.0 / scale

    x = state.x + net.xi[alpha] / scale
    if on_lattice(state.x, scale):
        x = np.round(x * scale) / scale

    if np.any(x < 0.0):
        raise InvariantViolationError(
            f"reaction {alpha} drove a concentration negative",
            reaction=alpha,
            x=x.tolist(),
        )
    return HybridState(t=state.t, z=z, x=x, u=state.u)
