"""Order triage: screen, rank by Monte Carlo value, and drop the weakest until the rest fit."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from .bnb import branch_and_bound
from .instance import (
    InfeasibleError,
    Instance,
    LimitError,
    Schedule,
    SolverConfig,
    SolveReport,
)
from .values import budget_capacity, monte_carlo_values, prune_unreasonable, value_combined

UNREASONABLE = "unreasonable"
BUDGET = "budget"
TRIAGED = "triaged"


def rank_orders(instance: Instance, orders, config: SolverConfig,
                jobs: int = 1) -> tuple[list[int], dict[str, float]]:
    """Orders sorted by combined value descending, ties by order id.

    Each order samples on its own seed stream, so ``jobs`` threads give the
    same values as one.
    """
    orders = list(orders)

    def one(a):
        return monte_carlo_values(instance, a, config)

    if jobs > 1 and len(orders) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            draws = list(pool.map(one, orders))
    else:
        draws = [one(a) for a in orders]
    values = {a: value_combined(w_mc, w_bid, config.combine_weight) for a, (w_mc, w_bid) in zip(orders, draws)}
    ranked = sorted(orders, key=lambda a: (-values[a], instance.order_ids[a]))
    return ranked, {instance.order_ids[a]: values[a] for a in ranked}


def triage_and_solve(instance: Instance, config: SolverConfig | None = None, jobs: int = 1) -> SolveReport:
    """Largest prefix of the value ranking that can be served in full, solved for revenue.

    Each round solves with every active order held to its goal; when that is
    impossible (or a round's limit passes with nothing feasible) the lowest
    ranked order is dropped. Rejection reasons: ``unreasonable`` (goal above
    total inventory impressions), ``budget`` (goal out of reach within the
    budget even buying fractionally) and ``triaged``.
    """
    config = config or SolverConfig()
    t0 = time.perf_counter()
    rejected: dict[str, str] = {}
    alive = prune_unreasonable(instance)
    for a in range(instance.n_orders):
        if a not in alive:
            rejected[instance.order_ids[a]] = UNREASONABLE
    affordable = []
    for a in alive:
        if budget_capacity(instance, a) < instance.targets[a] * (1 - 1e-12):
            rejected[instance.order_ids[a]] = BUDGET
        else:
            affordable.append(a)
    active, values = rank_orders(instance, affordable, config, jobs)

    round_cfg = replace(config, time_limit_ms=config.round_time_limit_ms or config.time_limit_ms)
    rounds = 0
    nodes = 0
    while active:
        rounds += 1
        try:
            rep = branch_and_bound(instance, active, round_cfg, require_all=True)
        except (InfeasibleError, LimitError):
            rejected[instance.order_ids[active[-1]]] = TRIAGED
            active = active[:-1]
            continue
        nodes += rep.nodes_explored
        accepted = tuple(instance.order_ids[a] for a in sorted(active))
        return replace(
            rep,
            accepted=accepted,
            rejected=dict(sorted(rejected.items())),
            nodes_explored=nodes,
            wall_time=time.perf_counter() - t0,
            rounds=rounds,
            order_values=values,
        )
    return SolveReport(
        schedule=Schedule.empty(instance.n_slots),
        revenue=0.0,
        accepted=(),
        rejected=dict(sorted(rejected.items())),
        lp_upper_bound=0.0,
        best_bound=0.0,
        nodes_explored=nodes,
        wall_time=time.perf_counter() - t0,
        status="optimal",
        rounds=rounds,
        order_values=values,
    )
