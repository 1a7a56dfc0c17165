"""Slot scheduling: instances, greedy heuristic, branch and bound, order triage."""

from .bnb import branch_and_bound, lp_relaxation
from .greedy import extend_greedily, fill_unsold, greedy_schedule, pair_values
from .instance import (
    UNSOLD,
    FeasibilityReport,
    InfeasibleError,
    Instance,
    LimitError,
    OrderCheck,
    Schedule,
    SchedulerError,
    SolverConfig,
    SolveReport,
    build_instance,
    check_feasible,
    order_totals,
    revenue,
)
from .simplex import DualSimplex, LPResult, SimplexBasis
from .synthetic import DeskInputs, desk_example, desk_inputs, random_small_instance
from .triage import BUDGET, TRIAGED, UNREASONABLE, rank_orders, triage_and_solve
from .values import (
    budget_capacity,
    knapsack_capacity,
    monte_carlo_values,
    prune_unreasonable,
    value_bid,
    value_combined,
    value_mc,
)

__all__ = [
    "branch_and_bound", "lp_relaxation", "extend_greedily", "fill_unsold", "greedy_schedule", "pair_values",
    "UNSOLD",
    "FeasibilityReport", "InfeasibleError", "Instance", "LimitError", "OrderCheck", "Schedule",
    "SchedulerError", "SolverConfig", "SolveReport", "build_instance", "check_feasible",
    "order_totals", "revenue", "DualSimplex", "LPResult", "SimplexBasis", "DeskInputs",
    "desk_example", "desk_inputs", "random_small_instance", "BUDGET", "TRIAGED", "UNREASONABLE",
    "rank_orders", "triage_and_solve", "budget_capacity", "knapsack_capacity",
    "monte_carlo_values", "prune_unreasonable", "value_bid", "value_combined", "value_mc",
]
