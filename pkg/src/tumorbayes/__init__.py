"""Bayesian inversion for porous-medium tumor growth models.

The forward model is the degenerate diffusion equation
rho_t = lap(rho^m) + h(x) rho with no-flux boundary, integrated by an
asymptotic-preserving prediction/transport/correction scheme that stays
accurate uniformly in the pressure exponent m.  On top of it sit a
linear-functional observation model, Gaussian/uniform priors over the
unknowns (initial-data center, scalar or spatially varying growth
rate), a random-walk Metropolis-Hastings sampler, and a config-driven
experiment runner.
"""

from .grids import (
    Grid,
    VelocityField,
    build_grid,
    face_average,
    initial_density_disk,
    initial_density_flower,
    minmod_slope,
    total_mass,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .solver import (
    ForwardSolution,
    LinearSolveError,
    SolverConfig,
    SolverError,
    correction_step,
    growth_field,
    init_velocity,
    prediction_step,
    solve_forward,
    transport_step,
)

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "VelocityField",
    "build_grid",
    "face_average",
    "initial_density_disk",
    "initial_density_flower",
    "minmod_slope",
    "total_mass",
    "KERNEL_BACKEND",
    "ForwardSolution",
    "LinearSolveError",
    "SolverConfig",
    "SolverError",
    "correction_step",
    "growth_field",
    "init_velocity",
    "prediction_step",
    "solve_forward",
    "transport_step",
    "__version__",
]
