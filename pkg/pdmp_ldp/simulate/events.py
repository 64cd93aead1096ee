"""Picklable rare-event predicates on JumpPath, usable from process pools."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Dict

import numpy as np

from pdmp_ldp.errors import ConfigError
from pdmp_ldp.simulate.pdmp import JumpPath

EventPredicate = Callable[[JumpPath], bool]


@dataclass(frozen=True)
class Always:
    value: bool = True

    def __call__(self, path: JumpPath) -> bool:
        return self.value


@dataclass(frozen=True)
class TerminalLevel:
    """x_species(T) >= level."""

    level: float
    species: int = 0

    def __call__(self, path: JumpPath) -> bool:
        return bool(path.terminal.x[self.species] >= self.level)


@dataclass(frozen=True)
class HitsLevel:
    """x_species reaches level at some time in [0, T]; checked at every event."""

    level: float
    xi: tuple
    species: int = 0

    def __call__(self, path: JumpPath) -> bool:
        return bool(np.max(path.x_at_events(np.asarray(self.xi))[:, self.species]) >= self.level)


@dataclass(frozen=True)
class FluxAtLeast:
    """z_reaction(T) >= level."""

    level: float
    reaction: int = 0

    def __call__(self, path: JumpPath) -> bool:
        # z is a multiple of 1/N; compare counts to dodge rounding at the boundary.
        counts = path.terminal.z[self.reaction] * path.scale
        return bool(counts >= self.level * path.scale - 1e-9)


def predicate_from_dict(data: Dict[str, Any], xi: np.ndarray) -> EventPredicate:
    """
    Build a predicate from a run-config block such as
    {"kind": "terminal_level", "level": 0.9, "species": 0}.
    """
    kind = data.get("kind", "terminal_level")
    if kind in ("always", "never"):
        return Always(kind == "always")
    if "level" not in data:
        raise ConfigError("event predicate needs a level", keys=["experiment.event.level"])
    if kind == "terminal_level":
        return TerminalLevel(float(data["level"]), int(data.get("species", 0)))
    if kind == "hits_level":
        return HitsLevel(float(data["level"]), tuple(map(tuple, np.asarray(xi).tolist())), int(data.get("species", 0)))
    if kind == "flux_at_least":
        return FluxAtLeast(float(data["level"]), int(data.get("reaction", 0)))
    raise ConfigError(f"unknown event kind {kind!r}", keys=["experiment.event.kind"])
