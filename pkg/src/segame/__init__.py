"""Zero-sum surveillance-evasion games on a 2-D grid.

An observer commits to a probability distribution over patrol trajectories;
an evader picks a path from a start point to a target.  The package computes
the Nash equilibrium of the resulting semi-infinite game: a time-dependent
Hamilton-Jacobi-Bellman solver gives the evader's best response to any
observer mixture, and projected supergradient ascent finds the observer's
optimal mixture.
"""

from .scenario import (
    Grid2D,
    TimeGrid,
    SensorModel,
    SolverParams,
    Scenario,
    ScenarioError,
    load_scenario,
    parse_scenario,
    serialize_scenario,
    build_level_set,
    LevelSetField,
)
from .visibility import VisibilityVolume, build_visibility, solve_shadow_field
from .observability import (
    ObservabilityField,
    MixedObservability,
    ConstantObservability,
    build_observability,
    integrate_costs,
)
from .hjb import INF_CAP, REACH_LIMIT, ValueFunction, solve_value_function
from .tracer import trace_path, best_response_cost, TracedPath
from .game import (
    project_simplex,
    evaluate_mixture,
    maximize_observer_value,
    collect_optimal_trajectories,
    solve_evader_policy,
    certify_equilibrium,
    solve_game,
    GameSolution,
)
from .pareto import sweep_tradeoff, ParetoPoint

__version__ = "0.1.0"

__all__ = [
    "Grid2D",
    "TimeGrid",
    "SensorModel",
    "SolverParams",
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "parse_scenario",
    "serialize_scenario",
    "build_level_set",
    "LevelSetField",
    "VisibilityVolume",
    "build_visibility",
    "solve_shadow_field",
    "ObservabilityField",
    "MixedObservability",
    "ConstantObservability",
    "build_observability",
    "integrate_costs",
    "INF_CAP",
    "REACH_LIMIT",
    "ValueFunction",
    "solve_value_function",
    "trace_path",
    "best_response_cost",
    "TracedPath",
    "project_simplex",
    "evaluate_mixture",
    "maximize_observer_value",
    "collect_optimal_trajectories",
    "solve_evader_policy",
    "certify_equilibrium",
    "solve_game",
    "GameSolution",
    "sweep_tradeoff",
    "ParetoPoint",
]
