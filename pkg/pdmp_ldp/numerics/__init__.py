"""Numerical plumbing shared by simulation and optimization."""

from pdmp_ldp.numerics.arrays import as_columns
from pdmp_ldp.numerics.differentiation import gradient, hessian, jacobian
from pdmp_ldp.numerics.newton import NewtonResult, damped_newton
from pdmp_ldp.numerics.ode import (
    DEFAULT_INTEGRATOR,
    SHOOTING_INTEGRATOR,
    IntegratorSettings,
    integrate,
)
from pdmp_ldp.numerics.rng import child_generator, generator_for

__all__ = [
    "as_columns",
    "gradient",
    "hessian",
    "jacobian",
    "NewtonResult",
    "damped_newton",
    "DEFAULT_INTEGRATOR",
    "SHOOTING_INTEGRATOR",
    "IntegratorSettings",
    "integrate",
    "child_generator",
    "generator_for",
]
