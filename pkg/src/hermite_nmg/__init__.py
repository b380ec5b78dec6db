"""Steady-state solver for 2D rarefied cavity flows.

Grad-Hermite moment discretization in velocity, first/second order finite
volumes in space, a four-direction fast sweeping smoother and a nonlinear
(FAS) multigrid accelerator for BGK, ES-BGK and Shakhov collision models.
"""

import os

# The blocked sweeping smoother and the data-parallel loops size their worker
# pool from numba; make sure a few workers exist even on single-core hosts.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(4, os.cpu_count() or 1)))
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

from .errors import (  # noqa: E402
    ConfigError,
    GradConstraintError,
    NonConvergence,
    NonphysicalState,
    NonSPDError,
    SolverError,
)
from .hermite_core import (  # noqa: E402
    BasisParams,
    MacroState,
    MomentRep,
    coefficient_count,
    extract_macro,
    grad_normalize,
    hermite_eval,
    max_hermite_root,
    maxwellian_rep,
    multi_indices,
    project,
)
from .collision import (  # noqa: E402
    CollisionModel,
    GasParams,
    collision_coeffs,
    collision_frequency,
    equilibrium_rep,
)
from .spatial import (  # noqa: E402
    CellField,
    Discretization,
    Grid2D,
    WallSpec,
    numerical_flux,
    reconstruct,
    residual,
    resting_walls,
    wall_flux,
)
from .single_level import (  # noqa: E402
    CflPolicy,
    euler_step,
    fast_sweep_step,
    global_dt,
    local_dt,
    mass_correction,
)
from .multigrid import (  # noqa: E402
    ConvergenceMonitor,
    CyclePolicy,
    GridHierarchy,
    SolveReport,
    coarse_rhs,
    fas_correct,
    nmg_cycle,
    residual_norm,
    restrict_residual,
    restrict_solution,
    solve_steady,
)

__version__ = "0.1.0"

__all__ = [
    "BasisParams",
    "CellField",
    "CflPolicy",
    "CollisionModel",
    "ConfigError",
    "ConvergenceMonitor",
    "CyclePolicy",
    "Discretization",
    "GasParams",
    "GradConstraintError",
    "Grid2D",
    "GridHierarchy",
    "MacroState",
    "MomentRep",
    "NonConvergence",
    "NonSPDError",
    "NonphysicalState",
    "SolveReport",
    "SolverError",
    "WallSpec",
    "coarse_rhs",
    "coefficient_count",
    "collision_coeffs",
    "collision_frequency",
    "equilibrium_rep",
    "euler_step",
    "extract_macro",
    "fas_correct",
    "fast_sweep_step",
    "global_dt",
    "grad_normalize",
    "hermite_eval",
    "local_dt",
    "mass_correction",
    "max_hermite_root",
    "maxwellian_rep",
    "multi_indices",
    "nmg_cycle",
    "numerical_flux",
    "project",
    "reconstruct",
    "residual",
    "residual_norm",
    "resting_walls",
    "restrict_residual",
    "restrict_solution",
    "solve_steady",
    "wall_flux",
]
