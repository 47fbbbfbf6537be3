"""Radio resource allocation for JSCC-coded users in an OFDMA downlink.

Maximizes the number of users meeting their delay and PSNR bounds under a
base-station power budget, using per-pair power minimization, a k-cardinality
assignment solver and an outer bisection on the number of served users.
"""

from .assignment import (
    Assignment,
    KCardinalitySolver,
    solve_hungarian,
    solve_k_assignment_flow,
    solve_p5_interior_point,
)
from .baselines import (
    Allocator,
    allocate,
    fixed_cr,
    hungarian_greedy,
    random_pairing,
    uniform_power,
)
from .capacity import AllocationResult, brute_force_p1, solve_capacity
from .errors import ConfigError, DomainError, ModelError, NotConverged, RoundingFailed, SchemaError
from .experiments import SweepSpec, class_sweep_delay, class_sweep_psnr, emit_csv, run_sweep
from .power import build_power_matrix, solve_p2
from .psnr_model import PsnrModel, default_model, load_model
from .scenario import Scenario, SystemConfig, User, generate_scenario, load_scenario, save_scenario

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "KCardinalitySolver",
    "solve_hungarian",
    "solve_k_assignment_flow",
    "solve_p5_interior_point",
    "Allocator",
    "allocate",
    "fixed_cr",
    "hungarian_greedy",
    "random_pairing",
    "uniform_power",
    "AllocationResult",
    "brute_force_p1",
    "solve_capacity",
    "ConfigError",
    "DomainError",
    "ModelError",
    "NotConverged",
    "RoundingFailed",
    "SchemaError",
    "SweepSpec",
    "class_sweep_delay",
    "class_sweep_psnr",
    "emit_csv",
    "run_sweep",
    "build_power_matrix",
    "solve_p2",
    "PsnrModel",
    "default_model",
    "load_model",
    "Scenario",
    "SystemConfig",
    "User",
    "generate_scenario",
    "load_scenario",
    "save_scenario",
]
