"""Exact PDMP simulation, ensembles and the deterministic limit."""

from pdmp_ldp.simulate.ensemble import EnsembleReport, simulate_ensemble
from pdmp_ldp.simulate.events import Always, FluxAtLeast, HitsLevel, TerminalLevel, predicate_from_dict
from pdmp_ldp.simulate.fluid import FixedPoint, FluidPath, conserved_directions, deterministic_limit, fixed_point
from pdmp_ldp.simulate.pdmp import JumpPath, simulate_pdmp

__all__ = [
    "EnsembleReport",
    "simulate_ensemble",
    "Always",
    "FluxAtLeast",
    "HitsLevel",
    "TerminalLevel",
    "predicate_from_dict",
    "FixedPoint",
    "FluidPath",
    "conserved_directions",
    "deterministic_limit",
    "fixed_point",
    "JumpPath",
    "simulate_pdmp",
]
