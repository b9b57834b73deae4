"""Explicit multiobjective MPC with symmetry-reduced offline libraries."""

from .config import BuildConfig, desk_grid_dims, full_grid_dims, grid_dims
from .errors import EmompcError
from .library import (
    GridSpec,
    Library,
    build_library,
    grid_count,
    load_library,
    save_library,
    symmetry_scan,
    verify_library,
)
from .maneuver import ReducedParameter, build_maneuver_mocp, build_reduced_mocp, reduce_state
from .mocp import Horizon, MocpDefinition, evaluate_objectives, integrate_rk4, trace_front, trace_front_full
from .online import SimulationSession, heuristic_rho, interpolate_control, neighbor_lookup, run_closed_loop
from .pareto import (
    ParetoEntry,
    ParetoSet,
    dominates,
    hausdorff,
    hausdorff_curve,
    nondominated_filter,
    proper_filter,
    select_by_weight,
)
from .solver import NlpProblem, SolverOptions, SolverResult, fd_gradient, minimize
from .track import Arc, GlobalPolyline, Line, load_track, local_track, save_track
from .vehicle import Se2Action, VehicleParams, VehicleState, bicycle_rhs, check_equivariance

__version__ = "0.1.0"
