"""Per-order screening and Monte Carlo order values.

An order's value is the share of random slot selections that would satisfy
it on its own (budget and goal, ignoring other orders). The bid variant
credits each satisfying draw with the fraction of budget it leaves unused.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .instance import Instance, SolverConfig

_DRAW_BUDGET = 10_000_000      # slot draws per order when mc_samples is left automatic
_CHUNK_CELLS = 2_000_000


def prune_unreasonable(instance: Instance, orders: Iterable[int] | None = None) -> list[int]:
    """Orders whose goal does not exceed the impressions of the whole inventory."""
    orders = range(instance.n_orders) if orders is None else orders
    total = instance.impressions.sum(axis=1)
    return [a for a in orders if not total[a] < instance.targets[a]]


def knapsack_capacity(S: np.ndarray, P: np.ndarray, B: float) -> float:
    """Most of ``S`` purchasable with budget ``B`` if slots could be bought fractionally."""
    rank = np.argsort(-S / P, kind="stable")
    cost = np.cumsum(P[rank])
    whole = cost <= B
    got = S[rank][whole].sum()
    k = int(whole.sum())
    if k < rank.size:
        spent = cost[k - 1] if k else 0.0
        got += S[rank[k]] * (B - spent) / P[rank[k]]
    return float(got)


def budget_capacity(instance: Instance, order: int) -> float:
    """Impressions the order could buy alone, fractionally, within its budget."""
    return knapsack_capacity(instance.impressions[order], instance.prices, instance.budgets[order])


def draw_probability(instance: Instance, order: int, config: SolverConfig) -> float:
    if config.mc_bernoulli_p is not None:
        return config.mc_bernoulli_p
    total = instance.impressions[order].sum()
    if total <= 0:
        return 0.5
    return float(np.clip(instance.targets[order] / total, 0.05, 0.5))


def sample_count(instance: Instance, config: SolverConfig) -> int:
    if config.mc_samples is not None:
        return config.mc_samples
    return int(np.clip(_DRAW_BUDGET // max(instance.n_slots, 1), 10_000, 1_000_000))


def monte_carlo_values(instance: Instance, order: int, config: SolverConfig) -> tuple[float, float]:
    """(W_MC, W_BID) from one shared set of draws on the order's own seed stream."""
    n = instance.n_slots
    N = sample_count(instance, config)
    p = draw_probability(instance, order, config)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, order]))
    P = instance.prices
    S = instance.impressions[order]
    B = instance.budgets[order]
    R = instance.targets[order]
    weights = np.column_stack([P, S])
    chunk = max(1, _CHUNK_CELLS // max(n, 1))
    feasible = 0
    excess = 0.0
    done = 0
    while done < N:
        k = min(chunk, N - done)
        X = (rng.random((k, n)) < p).astype(float)
        spend, imp = (X @ weights).T
        ok = (spend <= B * (1 + 1e-12)) & (imp >= R)
        feasible += int(ok.sum())
        excess += float(((B - spend[ok]) / B).sum())
        done += k
    return feasible / N, excess / N


def value_mc(instance: Instance, order: int, config: SolverConfig) -> float:
    return monte_carlo_values(instance, order, config)[0]


def value_bid(instance: Instance, order: int, config: SolverConfig) -> float:
    return monte_carlo_values(instance, order, config)[1]


def value_combined(w_mc: float, w_bid: float, r: float) -> float:
    if not 0 <= r <= 1:
        raise ValueError("r must lie in [0, 1]")
    return (1 - r) * w_mc + r * w_bid
