"""
Built-in models by name.

`calcium` is the two-reaction channel model; `custom` builds a mass-action
network with affine slow drift from an inline parameter map:

    {
      "x0": [0.0], "u0": [], "scale": 100, "rate_bound": 1.0,
      "reactions": [{"xi": [1], "rate": 1.0, "x_order": [0], "u_order": []}],
      "drift": {"constant": [], "u": [], "x": []}
    }

Intensities are k * prod x_i^a_i * prod u_j^b_j; the drift is c + B u + C x.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from pdmp_ldp.errors import ConfigError
from pdmp_ldp.model.network import PDMPModel, ReactionNetwork


@dataclass(frozen=True)
class MassActionIntensity:
    rate: float
    x_order: Tuple[float, ...]
    u_order: Tuple[float, ...] = ()

    def __call__(self, x: np.ndarray, u: np.ndarray) -> float:
        value = self.rate
        for xi, a in zip(x, self.x_order):
            if a:
                value *= xi**a
        for uj, b in zip(u, self.u_order):
            if b:
                value *= uj**b
        return float(value)

    def gradient(self, x: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        gx = np.zeros(x.size)
        gu = np.zeros(u.size)
        for i, a in enumerate(self.x_order):
            if a:
                reduced = list(self.x_order)
                reduced[i] = a - 1
                gx[i] = a * MassActionIntensity(self.rate, tuple(reduced), self.u_order)(x, u)
        for j, b in enumerate(self.u_order):
            if b:
                reduced = list(self.u_order)
                reduced[j] = b - 1
                gu[j] = b * MassActionIntensity(self.rate, self.x_order, tuple(reduced))(x, u)
        return gx, gu


@dataclass(frozen=True, eq=False)
class AffineDrift:
    constant: np.ndarray
    u_matrix: np.ndarray
    x_matrix: np.ndarray

    def __call__(self, u: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.constant + self.u_matrix @ np.asarray(u, dtype=float) + self.x_matrix @ np.asarray(x, dtype=float)

    def jacobian(self, u: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.u_matrix, self.x_matrix


def mass_action_model(params: Dict[str, Any]) -> PDMPModel:
    """Build the `custom` model; ConfigError lists every malformed key."""
    problems: List[str] = []
    reactions = params.get("reactions") or []
    if not reactions:
        problems.append("model.params.reactions")
    x0 = np.asarray(params.get("x0", []), dtype=float)
    u0 = np.asarray(params.get("u0", []), dtype=float)
    d, m = x0.size, u0.size
    if d == 0:
        problems.append("model.params.x0")

    xi_rows: List[List[int]] = []
    intensities: List[MassActionIntensity] = []
    for k, r in enumerate(reactions):
        xi = list(r.get("xi", []))
        x_order = tuple(float(a) for a in r.get("x_order", [0] * d))
        u_order = tuple(float(b) for b in r.get("u_order", [0] * m))
        if len(xi) != d or len(x_order) != d or len(u_order) != m:
            problems.append(f"model.params.reactions[{k}]")
            continue
        xi_rows.append([int(v) for v in xi])
        intensities.append(MassActionIntensity(float(r.get("rate", 0.0)), x_order, u_order))

    drift_cfg = params.get("drift") or {}
    constant = np.asarray(drift_cfg.get("constant", [0.0] * m), dtype=float).reshape(m)
    u_matrix = np.asarray(drift_cfg.get("u", np.zeros((m, m))), dtype=float).reshape(m, m)
    x_matrix = np.asarray(drift_cfg.get("x", np.zeros((m, d))), dtype=float).reshape(m, d)
    if problems:
        raise ConfigError("invalid custom model parameters", keys=problems)

    drift = AffineDrift(constant, u_matrix, x_matrix)
    network = ReactionNetwork(
        xi=np.array(xi_rows),
        intensities=tuple(intensities),
        rate_bound=float(params.get("rate_bound", np.inf)),
        intensity_gradients=tuple(i.gradient for i in intensities),
    )
    return PDMPModel(
        network=network,
        drift=drift,
        m=m,
        u0=u0,
        x0=x0,
        scale=int(params.get("scale", 100)),
        drift_jacobian=drift.jacobian,
        name="custom",
        metadata={"params": params},
    )


def _calcium_builder(params: Dict[str, Any]) -> PDMPModel:
    from pdmp_ldp.calcium.model import calcium_model_from_dict

    return calcium_model_from_dict(params)


MODEL_BUILDERS: Dict[str, Callable[[Dict[str, Any]], PDMPModel]] = {
    "calcium": _calcium_builder,
    "custom": mass_action_model,
}


def build_model(name: str, params: Dict[str, Any] | None = None) -> PDMPModel:
    builder = MODEL_BUILDERS.get(name)
    if builder is None:
        raise ConfigError(f"unknown model {name!r}", keys=["model.name"])
    return builder(params or {})
