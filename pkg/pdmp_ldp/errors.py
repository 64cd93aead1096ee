"""
Exception hierarchy.

Every error raised by the library derives from PdmpError and carries its
diagnostics as keyword-only attributes so the CLI can serialize them.
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional, Sequence


class PdmpError(RuntimeError):
    """Base class for library failures."""

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details: Dict[str, Any] = {k: v for k, v in details.items() if v is not None}

    def to_dict(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "message": str(self), **self.details}


class ConfigError(PdmpError):
    """Invalid run configuration; lists every offending key."""

    def __init__(self, message: str, *, keys: Sequence[str] = ()):
        super().__init__(message, keys=list(keys))
        self.keys: List[str] = list(keys)


class ModelError(PdmpError):
    """Structural or evaluation problem in a reaction network or PDMP model."""


class NetworkStructureError(ModelError):
    pass


class ModelEvaluationError(ModelError):
    def __init__(self, message: str, *, reaction: int | None = None, value: float | None = None):
        super().__init__(message, reaction=reaction, value=value)
        self.reaction = reaction
        self.value = value


class InvariantViolationError(ModelError):
    def __init__(self, message: str, *, reaction: int | None = None, x: Optional[List[float]] = None):
        super().__init__(message, reaction=reaction, x=x)
        self.reaction = reaction
        self.x = x


class IntegrationError(PdmpError):
    """The ODE integrator could not advance past `t`."""

    def __init__(self, message: str, *, t: float | None = None, method: str | None = None):
        super().__init__(message, t=t, method=method)
        self.t = t
        self.method = method


class SimulationError(PdmpError):
    def __init__(self, message: str, *, t: float | None = None, trajectory: int | None = None):
        super().__init__(message, t=t, trajectory=trajectory)
        self.t = t
        self.trajectory = trajectory


class FixedPointError(PdmpError):
    def __init__(self, message: str, *, residual: float | None = None, iterations: int | None = None):
        super().__init__(message, residual=residual, iterations=iterations)
        self.residual = residual
        self.iterations = iterations


class PathError(PdmpError):
    """A path violates a SmoothPath invariant at `node`."""

    def __init__(self, message: str, *, node: int | None = None, violation: float | None = None):
        super().__init__(message, node=node, violation=violation)
        self.node = node
        self.violation = violation


class RateFloorError(PdmpError):
    def __init__(
        self,
        message: str,
        *,
        reaction: int | None = None,
        interval: Optional[tuple[float, float]] = None,
    ):
        super().__init__(message, reaction=reaction, interval=list(interval) if interval else None)
        self.reaction = reaction
        self.interval = interval


class ContractedLagrangianError(PdmpError):
    def __init__(self, message: str, *, residual: float | None = None, iterations: int | None = None):
        super().__init__(message, residual=residual, iterations=iterations)
        self.residual = residual
        self.iterations = iterations


class SingularityError(PdmpError):
    def __init__(
        self,
        message: str,
        *,
        reaction: int | None = None,
        condition: float | None = None,
    ):
        super().__init__(message, reaction=reaction, condition=condition)
        self.reaction = reaction
        self.condition = condition


class ShootingError(PdmpError):
    def __init__(self, message: str, *, escape_time: float | None = None):
        super().__init__(message, escape_time=escape_time)
        self.escape_time = escape_time


class BVPError(PdmpError):
    def __init__(self, message: str, *, starts: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message, starts=starts)
        self.starts = starts or []


class ExperimentError(PdmpError):
    def __init__(self, message: str, *, stage: str, cause: Dict[str, Any] | None = None):
        super().__init__(message, stage=stage, cause=cause)
        self.stage = stage
        self.cause = cause
