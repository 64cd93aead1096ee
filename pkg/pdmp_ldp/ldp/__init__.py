"""Large-deviations action, contracted Lagrangian and time rescaling."""

from pdmp_ldp.ldp.action import ActionResult, action, poisson_action
from pdmp_ldp.ldp.contracted import (
    InnerMinimum,
    LagrangianDerivatives,
    contracted_derivatives,
    contracted_lagrangian,
)
from pdmp_ldp.ldp.paths import (
    SmoothPath,
    constant_rate_path,
    linear_fluxes,
    path_from_fluxes,
    sample_fluid,
    uniform_grid,
)
from pdmp_ldp.ldp.rate import (
    INFINITE_ACTION,
    RATE_FLOOR,
    InfiniteAction,
    action_from_json,
    action_to_json,
    ell,
    flux_lagrangian,
    is_infinite,
)
from pdmp_ldp.ldp.rescaling import RescaledPaths, inverse_time_rescale, time_rescale_map

__all__ = [
    "ActionResult",
    "action",
    "poisson_action",
    "InnerMinimum",
    "LagrangianDerivatives",
    "contracted_derivatives",
    "contracted_lagrangian",
    "SmoothPath",
    "constant_rate_path",
    "linear_fluxes",
    "path_from_fluxes",
    "sample_fluid",
    "uniform_grid",
    "INFINITE_ACTION",
    "RATE_FLOOR",
    "InfiniteAction",
    "action_from_json",
    "action_to_json",
    "ell",
    "flux_lagrangian",
    "is_infinite",
    "RescaledPaths",
    "inverse_time_rescale",
    "time_rescale_map",
]
