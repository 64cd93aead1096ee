"""
Statistical confidence scoring for Monte Carlo rare-event estimates.

Provides confidence levels from hit counts, Wilson intervals on empirical
probabilities, the ensemble size needed for a target relative error, and the
least-squares slope of -log P against N.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import binomtest, linregress, norm


class ConfidenceLevel(str, Enum):
    """How far an empirical rare-event probability can be trusted."""
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"
    NONE = "none"


@dataclass(frozen=True)
class ConfidenceThresholds:
    high_hits: int = 100
    medium_hits: int = 20
    # Relative half-width of the interval required on top of the hit count.
    high_relative_width: float = 0.25
    confidence: float = 0.95


DEFAULT_THRESHOLDS = ConfidenceThresholds()


def wilson_interval(hits: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials < 1:
        raise ValueError("trials must be positive")
    if not 0 <= hits <= trials:
        raise ValueError("hits must lie in [0, trials]")
    ci = binomtest(int(hits), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def compute_confidence_level(
    hits: int,
    trials: int,
    thresholds: ConfidenceThresholds = DEFAULT_THRESHOLDS,
) -> ConfidenceLevel:
    """
    HIGH needs BOTH hits >= high_hits AND a Wilson half-width within
    high_relative_width of the estimate. MEDIUM needs hits >= medium_hits.
    No hits at all is NONE.
    """
    if hits <= 0:
        return ConfidenceLevel.NONE
    p = hits / trials
    low, high = wilson_interval(hits, trials, thresholds.confidence)
    if hits >= thresholds.high_hits and 0.5 * (high - low) <= thresholds.high_relative_width * p:
        return ConfidenceLevel.HIGH
    if hits >= thresholds.medium_hits:
        return ConfidenceLevel.MEDIUM
    return ConfidenceLevel.LOW


def trajectories_needed(probability: float, relative_error: float = 0.1, confidence: float = 0.95) -> Optional[int]:
    """
    Ensemble size for which the normal-approximation interval on an event of
    the given probability has half-width relative_error * probability.
    None when the probability is zero.
    """
    if probability <= 0:
        return None
    if not 0 < probability <= 1 or relative_error <= 0:
        raise ValueError("probability must lie in (0, 1] and relative_error be positive")
    z = norm.ppf(0.5 + 0.5 * confidence)
    return int(np.ceil(z * z * (1.0 - probability) / (probability * relative_error**2)))


def minus_log_p_slope(scales: Sequence[float], hits: Sequence[int], trials: Sequence[int]) -> Dict[str, Any]:
    """
    Least-squares fit of -log P_hat against N over the rows with hits.

    The slope estimates the large-deviations exponent J*. Rows with zero hits
    are dropped; fewer than two usable rows give a null slope.
    """
    scales = np.asarray(scales, dtype=float)
    hits = np.asarray(hits, dtype=float)
    trials = np.asarray(trials, dtype=float)
    usable = hits > 0
    if int(usable.sum()) < 2:
        return {"slope": None, "intercept": None, "rows": int(usable.sum())}
    y = -np.log(hits[usable] / trials[usable])
    fit = linregress(scales[usable], y)
    return {
        "slope": float(fit.slope),
        "intercept": float(fit.intercept),
        "slope_stderr": float(fit.stderr),
        "rows": int(usable.sum()),
    }


def add_confidence_columns(df: pd.DataFrame, thresholds: ConfidenceThresholds = DEFAULT_THRESHOLDS) -> pd.DataFrame:
    """
    Add confidence, p_low, p_high and trajectories_needed to a table of
    Monte Carlo rows. Expects columns: hits, trials.
    """
    if df.empty:
        return df

    result = df.copy()
    for col in ("hits", "trials"):
        result[col] = pd.to_numeric(result[col], errors="coerce").fillna(0).astype(int)

    def _scores(row: pd.Series) -> Dict[str, Any]:
        hits, trials = int(row["hits"]), int(row["trials"])
        low, high = wilson_interval(hits, trials, thresholds.confidence)
        p = hits / trials
        return {
            "confidence": compute_confidence_level(hits, trials, thresholds).value,
            "p_low": low,
            "p_high": high,
            "trajectories_needed": trajectories_needed(p, thresholds.high_relative_width, thresholds.confidence),
        }

    scores = result.apply(_scores, axis=1, result_type="expand")
    for col in scores.columns:
        result[col] = scores[col]
    return result
