from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List

from pdmp_ldp.errors import ConfigError


@dataclass(frozen=True)
class CalciumParams:
    """
    Channel-gating calcium model.

    x is the open fraction of N channels; u1 is cytosolic and u2 store
    calcium, with gamma * u1 + u2 = c_total conserved.
    """

    k_f: float = 1.0  # channel flux coefficient
    V_s: float = 0.9  # max SERCA rate
    K_s: float = 0.2  # SERCA half-saturation
    k_leak: float = 0.05
    gamma: float = 5.0  # store / cytosol volume ratio
    alpha_open: float = 2.0
    alpha_close: float = 1.0
    c_total: float = 10.0
    N: int = 1000
    T: float = 5.0
    x_target: float = 0.9
    x0: float = 0.1
    u1_0: float = 0.1

    @property
    def rate_bound(self) -> float:
        # u1 <= c_total / gamma while u2 stays nonnegative.
        return max(self.alpha_close, self.alpha_open * self.c_total / self.gamma)

    @property
    def u2_0(self) -> float:
        return self.c_total - self.gamma * self.u1_0

    def invalid_keys(self) -> List[str]:
        bad = [
            name
            for name in ("k_f", "V_s", "K_s", "k_leak", "gamma", "alpha_open", "alpha_close", "c_total", "T")
            if not getattr(self, name) > 0
        ]
        if self.N < 1:
            bad.append("N")
        if not 0 < self.x_target <= 1:
            bad.append("x_target")
        if not 0 <= self.x0 <= 1:
            bad.append("x0")
        if self.u1_0 < 0:
            bad.append("u1_0")
        return bad

    def validate(self) -> "CalciumParams":
        bad = self.invalid_keys()
        if bad:
            raise ConfigError("invalid calcium parameters", keys=[f"model.params.{k}" for k in bad])
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any] | None) -> "CalciumParams":
        data = dict(data or {})
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError("unknown calcium parameters", keys=[f"model.params.{k}" for k in unknown])
        kwargs: Dict[str, Any] = {}
        bad: List[str] = []
        for name, value in data.items():
            try:
                kwargs[name] = int(value) if name == "N" else float(value)
            except (TypeError, ValueError):
                bad.append(f"model.params.{name}")
        if bad:
            raise ConfigError("non-numeric calcium parameters", keys=bad)
        return cls(**kwargs).validate()
