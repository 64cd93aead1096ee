"""
Sampling checks of the structural assumptions on a reaction network.

Intensities are arbitrary callables, so boundedness and the positivity guard
cannot be proven; they are spot-checked on random points of an operating box
and on the faces x_i = 0 where a reaction consumes species i.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np

from pdmp_ldp.errors import NetworkStructureError
from pdmp_ldp.model.network import ReactionNetwork


@dataclass(frozen=True)
class SamplingBox:
    x_low: Sequence[float]
    x_high: Sequence[float]
    u_low: Sequence[float] = ()
    u_high: Sequence[float] = ()

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SamplingBox":
        return cls(
            x_low=list(data.get("x_low", [])),
            x_high=list(data.get("x_high", [])),
            u_low=list(data.get("u_low", [])),
            u_high=list(data.get("u_high", [])),
        )


@dataclass
class ValidationReport:
    samples: int
    max_rates: List[float]
    negative_rate: List[Dict[str, Any]] = field(default_factory=list)
    guard_violations: List[Dict[str, Any]] = field(default_factory=list)
    bound_violations: List[Dict[str, Any]] = field(default_factory=list)
    non_finite: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not (self.negative_rate or self.guard_violations or self.bound_violations or self.non_finite)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "samples": self.samples,
            "max_rates": self.max_rates,
            "negative_rate": self.negative_rate,
            "guard_violations": self.guard_violations,
            "bound_violations": self.bound_violations,
            "non_finite": self.non_finite,
        }


def _record(bucket: List[Dict[str, Any]], alpha: int, x: np.ndarray, u: np.ndarray, value: float) -> None:
    # Keep reports small; the first few witnesses are enough.
    if len(bucket) < 10:
        bucket.append({"reaction": alpha, "x": x.tolist(), "u": u.tolist(), "rate": value})


def validate_network(
    net: ReactionNetwork,
    box: SamplingBox,
    samples: int,
    *,
    seed: int = 0,
) -> ValidationReport:
    """
    Check 0 <= lambda_alpha <= K and the positivity guard on sampled points.

    Raises:
        NetworkStructureError: zero reactions, samples < 1, or box dimensions
            that do not match the network.
    """
    if samples < 1:
        raise NetworkStructureError("samples must be >= 1")
    if net.M == 0:
        raise NetworkStructureError("network has no reactions")
    x_low = np.asarray(box.x_low, dtype=float)
    x_high = np.asarray(box.x_high, dtype=float)
    u_low = np.asarray(box.u_low, dtype=float)
    u_high = np.asarray(box.u_high, dtype=float)
    if x_low.size != net.d or x_high.size != net.d:
        raise NetworkStructureError(f"sampling box has {x_low.size} x-bounds, network has d={net.d}")
    if u_low.size != u_high.size:
        raise NetworkStructureError("u bounds have mismatched lengths")

    rng = np.random.default_rng(seed)
    report = ValidationReport(samples=samples, max_rates=[0.0] * net.M)

    def check(alpha: int, x: np.ndarray, u: np.ndarray) -> float:
        value = float(net.intensities[alpha](x, u))
        if not np.isfinite(value):
            _record(report.non_finite, alpha, x, u, value)
            return value
        report.max_rates[alpha] = max(report.max_rates[alpha], value)
        if value < 0.0:
            _record(report.negative_rate, alpha, x, u, value)
        if value > net.rate_bound:
            _record(report.bound_violations, alpha, x, u, value)
        return value

    consumed = [np.flatnonzero(net.xi[a] < 0) for a in range(net.M)]
    for _ in range(samples):
        x = rng.uniform(x_low, x_high)
        u = rng.uniform(u_low, u_high) if u_low.size else np.zeros(0)
        for alpha in range(net.M):
            check(alpha, x, u)
            for i in consumed[alpha]:
                face = x.copy()
                face[i] = 0.0
                value = check(alpha, face, u)
                if np.isfinite(value) and value != 0.0:
                    _record(report.guard_violations, alpha, face, u, value)
    return report
