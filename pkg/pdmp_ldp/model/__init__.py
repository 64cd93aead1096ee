"""Reaction networks, PDMP models and the state-update primitives."""

from pdmp_ldp.model.network import AnalyticLagrangian, PDMPModel, ReactionNetwork, intensity
from pdmp_ldp.model.registry import MODEL_BUILDERS, build_model, mass_action_model
from pdmp_ldp.model.state import HybridState, apply_reaction, on_lattice, snap_to_lattice
from pdmp_ldp.model.validation import SamplingBox, ValidationReport, validate_network

__all__ = [
    "AnalyticLagrangian",
    "PDMPModel",
    "ReactionNetwork",
    "intensity",
    "MODEL_BUILDERS",
    "build_model",
    "mass_action_model",
    "HybridState",
    "apply_reaction",
    "on_lattice",
    "snap_to_lattice",
    "SamplingBox",
    "ValidationReport",
    "validate_network",
]
