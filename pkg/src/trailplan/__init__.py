"""Optimal walking-path planning over terrain via HJB value functions.

Solve the cost-to-go PDE backwards in time on a grid, extract the optimal
steering field, and integrate deterministic paths or stochastic ensembles.
"""

from .control import ControlField, ControlValue, control_field_snapshot, grad_u_at, optimal_control
from .hamiltonian import HamiltonianConfig, continuous_h, godunov, lax_friedrichs
from .kinematics import DirectionSample, SpeedModel, base_speed, effective_speed
from .solver import (HjbSolver, SolverConfig, ValueFunction, apply_bcs, solve,
                     terminal_condition)
from .terrain import (ElevationField, SlopeVector, elevation_at, gradient_at,
                      load_esri_ascii, make_synthetic, write_esri_ascii)
from .trajectory import (EnsembleStats, Trajectory, critical_time_search,
                         integrate_deterministic, integrate_stochastic, run_ensemble)

__version__ = "0.1.0"

__all__ = [
    "ControlField", "ControlValue", "control_field_snapshot", "grad_u_at",
    "optimal_control", "HamiltonianConfig", "continuous_h", "godunov",
    "lax_friedrichs", "DirectionSample", "SpeedModel", "base_speed",
    "effective_speed", "HjbSolver", "SolverConfig", "ValueFunction",
    "apply_bcs", "solve", "terminal_condition", "ElevationField", "SlopeVector",
    "elevation_at", "gradient_at", "load_esri_ascii", "make_synthetic",
    "write_esri_ascii", "EnsembleStats", "Trajectory", "critical_time_search",
    "integrate_deterministic", "integrate_stochastic", "run_ensemble",
    "__version__",
]
