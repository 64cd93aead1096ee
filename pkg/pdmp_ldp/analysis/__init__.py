"""
Confidence scoring for Monte Carlo rare-event estimates.
"""

from pdmp_ldp.analysis.confidence import (
    ConfidenceLevel,
    ConfidenceThresholds,
    add_confidence_columns,
    compute_confidence_level,
    minus_log_p_slope,
    trajectories_needed,
    wilson_interval,
)

__all__ = [
    "ConfidenceLevel",
    "ConfidenceThresholds",
    "add_confidence_columns",
    "compute_confidence_level",
    "minus_log_p_slope",
    "trajectories_needed",
    "wilson_interval",
]
