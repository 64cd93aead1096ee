"""Euler-Lagrange systems, shooting, collocation and hitting exponents."""

from pdmp_ldp.optimal_path.collocation import CollocationResult, collocation_minimize
from pdmp_ldp.optimal_path.euler_lagrange import (
    ContractedRHS,
    ELState,
    FluxRHS,
    assemble_contracted_el_rhs,
    assemble_flux_el_rhs,
    el_residual,
)
from pdmp_ldp.optimal_path.hitting import HittingEstimate, hitting_exponent
from pdmp_ldp.optimal_path.shooting import (
    OptimalTrajectory,
    SegmentedResidual,
    ShootingProblem,
    ShootingSettings,
    collocation_nodes,
    shoot,
    solve_bvp,
    start_grid,
)

__all__ = [
    "CollocationResult",
    "collocation_minimize",
    "ContractedRHS",
    "ELState",
    "FluxRHS",
    "assemble_contracted_el_rhs",
    "assemble_flux_el_rhs",
    "el_residual",
    "HittingEstimate",
    "hitting_exponent",
    "OptimalTrajectory",
    "SegmentedResidual",
    "ShootingProblem",
    "ShootingSettings",
    "collocation_nodes",
    "shoot",
    "solve_bvp",
    "start_grid",
]
