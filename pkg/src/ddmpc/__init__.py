"""Data-driven MPC from a single persistently exciting trajectory."""
from .errors import (ConfigError, DataQualityError, DDMPCError, PreconditionError, ShapeError,
                     ValidationError)
from .loop import ClosedLoopConfig, ClosedLoopTrace, DisturbanceSpec, run_closed_loop
from .mpc_nominal import MpcSolution, NominalMpcConfig, Polytope, solve_nominal
from .mpc_robust import RobustMpcConfig, RobustMpcSolution, solve_robust
from .plant import NoiseSpec, StateSpaceModel, double_integrator, generate_data, pe_input, scalar_plant
from .qp import QpSettings, QpSolution, QuadraticProgram, solve
from .signals import (ExtendedState, TrajectoryData, build_hankel, extended_state,
                      is_persistently_exciting, membership_residual)

__version__ = "0.1.0"

__all__ = [
    "ClosedLoopConfig", "ClosedLoopTrace", "ConfigError", "DataQualityError", "DDMPCError",
    "DisturbanceSpec", "ExtendedState", "MpcSolution", "NoiseSpec", "NominalMpcConfig",
    "Polytope", "PreconditionError", "QpSettings", "QpSolution", "QuadraticProgram",
    "RobustMpcConfig", "RobustMpcSolution", "ShapeError", "StateSpaceModel", "TrajectoryData",
    "ValidationError", "build_hankel", "double_integrator", "extended_state", "generate_data",
    "is_persistently_exciting", "membership_residual", "pe_input", "run_closed_loop",
    "scalar_plant", "solve", "solve_nominal", "solve_robust",
]
