"""Shared passenger-freight bus scheduling and capacity allocation."""

from .capacity import bus_energy_kwh, carbon_report, separated_truck_plan
from .economics import (ConstraintResiduals, CostBreakdown, FareMode, constraint_residuals,
                        dwell_cost, fixed_and_running_cost, freight_revenue,
                        passenger_revenue, profit, seat_count)
from .evaluation import Evaluation, evaluate
from .model import (Instance, InstanceError, Line, Run, Stop, StopKind, VehicleType,
                    load_instance, load_instance_path, route_direction, run_distance,
                    validate_instance)
from .scalarize import EwmWeights, Fitness, NormBounds, ewm_weights, fitness
from .service_time import (RunTimeline, SegmentTimeStats, TimeBreakdown,
                           cornish_fisher_quantile, monte_carlo_reliability, reliability,
                           segment_time, simulate_timeline, stop_dwell, time_breakdown,
                           time_budget)
from .solution import Solution
from .solver import (ALGORITHMS, OptimizeResult, SolverConfig, SolverTrace, de_trial,
                     decode, encode, init_population_tent, levy_step, optimize,
                     search_bounds, time_control, wrap_bounds)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "ConstraintResiduals", "CostBreakdown", "Evaluation", "EwmWeights",
    "FareMode", "Fitness", "Instance", "InstanceError", "Line", "NormBounds",
    "OptimizeResult", "Run", "RunTimeline", "SegmentTimeStats", "Solution", "SolverConfig",
    "SolverTrace", "Stop", "StopKind", "TimeBreakdown", "VehicleType", "bus_energy_kwh",
    "carbon_report", "constraint_residuals", "cornish_fisher_quantile", "de_trial", "decode",
    "dwell_cost", "encode", "evaluate", "ewm_weights", "fitness", "fixed_and_running_cost",
    "freight_revenue", "init_population_tent", "levy_step", "load_instance",
    "load_instance_path", "monte_carlo_reliability", "optimize", "passenger_revenue",
    "profit", "reliability", "route_direction", "run_distance", "search_bounds",
    "seat_count", "segment_time", "separated_truck_plan", "simulate_timeline", "stop_dwell",
    "time_breakdown", "time_budget", "time_control", "validate_instance", "wrap_bounds",
]
