"""
The local rate l(a) = a log a - a + 1, the flux Lagrangian, and the tagged
infinite-action sentinel.
"""

from __future__ import annotations

from typing import Union

import numpy as np
from scipy.special import xlogy

from pdmp_ldp.model.network import ReactionNetwork

# Rates at or below this are treated as zero when detecting forbidden flux.
RATE_FLOOR = 1e-12


class InfiniteAction:
    """
    +inf as a value, not a float.

    Arithmetic on it is not defined; callers branch on `is_infinite`. It
    serializes as the string "+inf" and sorts above every float.
    """

    _instance: "InfiniteAction | None" = None

    def __new__(cls) -> "InfiniteAction":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __reduce__(self):
        return (InfiniteAction, ())

    def __repr__(self) -> str:
        return "INFINITE_ACTION"

    def __str__(self) -> str:
        return "+inf"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, InfiniteAction)

    def __hash__(self) -> int:
        return hash("InfiniteAction")

    def __lt__(self, other: object) -> bool:
        return False

    def __le__(self, other: object) -> bool:
        return isinstance(other, InfiniteAction)

    def __gt__(self, other: object) -> bool:
        return not isinstance(other, InfiniteAction)

    def __ge__(self, other: object) -> bool:
        return True

    def to_json(self) -> str:
        return "+inf"


INFINITE_ACTION = InfiniteAction()

ActionValue = Union[float, InfiniteAction]


def is_infinite(value: object) -> bool:
    return isinstance(value, InfiniteAction)


def action_to_json(value: ActionValue) -> Union[float, str]:
    return value.to_json() if isinstance(value, InfiniteAction) else float(value)


def action_from_json(value: Union[float, str, None]) -> ActionValue:
    if value == "+inf" or value is None:
        return INFINITE_ACTION
    return float(value)


def ell(a: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    l(a) = a log a - a + 1 with l(0) = 1.

    Raises:
        ValueError: for negative arguments.
    """
    arr = np.asarray(a, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("ell is defined for a >= 0 only")
    out = xlogy(arr, arr) - arr + 1.0
    return float(out) if out.ndim == 0 else out


def flux_terms(q: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """
    Per-reaction terms lambda * l(q / lambda); +inf (as a float) where q > 0
    meets a rate at the floor. Internal; public callers get the sentinel.
    """
    q = np.asarray(q, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if np.any(q < 0):
        raise ValueError("fluxes must be nonnegative")
    dead = rates <= RATE_FLOOR
    safe = np.where(dead, 1.0, rates)
    # lambda l(q/lambda) = q log(q/lambda) - q + lambda
    terms = xlogy(q, q) - xlogy(q, safe) - q + safe
    terms = np.where(dead, np.where(q > 0, np.inf, np.where(rates > 0, rates, 0.0)), terms)
    return terms


def flux_lagrangian(q: np.ndarray, x: np.ndarray, u: np.ndarray, net: ReactionNetwork) -> ActionValue:
    """L(q, x, u) = sum_alpha lambda_alpha l(q_alpha / lambda_alpha)."""
    terms = flux_terms(q, net.rates(x, u))
    if np.any(np.isinf(terms)):
        return INFINITE_ACTION
    return float(np.sum(terms))
