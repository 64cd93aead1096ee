"""The stochastic calcium-channel model and its spark-to-wave experiment."""

from pdmp_ldp.calcium.experiment import MonteCarloPlan, WaveReport, wave_transition_experiment
from pdmp_ldp.calcium.lagrangian import (
    CalciumLagrangian,
    calcium_contracted_lagrangian,
    calcium_lagrangian_derivatives,
    z1dot_quadratic,
    zdot_sensitivities,
)
from pdmp_ldp.calcium.model import calcium_model, calcium_model_from_dict, calcium_network, conserved_total, reduce_u2
from pdmp_ldp.calcium.params import CalciumParams

__all__ = [
    "MonteCarloPlan",
    "WaveReport",
    "wave_transition_experiment",
    "CalciumLagrangian",
    "calcium_contracted_lagrangian",
    "calcium_lagrangian_derivatives",
    "z1dot_quadratic",
    "zdot_sensitivities",
    "calcium_model",
    "calcium_model_from_dict",
    "calcium_network",
    "conserved_total",
    "reduce_u2",
    "CalciumParams",
]
