"""Value-ratio greedy heuristic.

A pair (slot, order) is worth V = (S / R) / (P / B): the fraction of the
order's goal bought per fraction of its budget spent. The best pair among
free slots and unmet, still-affordable orders is taken until nothing
qualifies. Orders left short of their goal are then dropped and the whole
pass restarts without them.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .instance import UNSOLD, Instance, Schedule


def pair_values(instance: Instance) -> np.ndarray:
    """V[a, s]; orders with a zero target get +inf on slots with impressions."""
    S = instance.impressions
    R = instance.targets[:, None]
    B = instance.budgets[:, None]
    P = instance.prices[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        V = (S / R) / (P / B)
    return np.where(np.isnan(V), 0.0, V)


def _single_pass(instance: Instance, orders: list[int], V: np.ndarray,
                 start: np.ndarray | None = None) -> np.ndarray:
    n = instance.n_slots
    assign = np.full(n, UNSOLD) if start is None else start.copy()
    if not orders:
        return assign
    rows = np.array(orders)
    P = instance.prices
    S_all = instance.impressions
    sold = assign != UNSOLD
    spend_all = np.bincount(assign[sold], weights=P[sold], minlength=instance.n_orders)
    imp_all = np.zeros(instance.n_orders)
    np.add.at(imp_all, assign[sold], S_all[assign[sold], np.flatnonzero(sold)])
    spend = spend_all[rows].copy()
    imp = imp_all[rows].copy()
    budget = instance.budgets[rows]
    target = instance.targets[rows]
    S = instance.impressions[rows]
    forbid = instance.forbid_consecutive[rows]
    val = V[rows].copy()
    val[val <= 0] = -np.inf
    pairs = instance.adjacent_pairs
    left = {s: [] for s in range(n)}
    for s0, s1 in pairs:
        left[int(s1)].append(int(s0))
        left[int(s0)].append(int(s1))
    for r in np.flatnonzero(forbid):
        for s in np.flatnonzero(assign == rows[r]):
            for t in left[s]:
                val[r, t] = -np.inf
    unmet = imp < target
    while True:
        afford = (spend[:, None] + P[None, :]) <= budget[:, None] * (1 + 1e-12)
        live = afford & unmet[:, None] & (assign == UNSOLD)[None, :]
        cand = np.where(live, val, -np.inf)
        k = int(np.argmax(cand.T.ravel()))  # slot-major: ties go to lowest slot, then order
        s, r = divmod(k, len(rows))
        if not np.isfinite(cand[r, s]):
            break
        assign[s] = rows[r]
        spend[r] += P[s]
        imp[r] += S[r, s]
        unmet[r] = imp[r] < target[r]
        if forbid[r]:
            for t in left[s]:
                val[r, t] = -np.inf
        val[r, s] = -np.inf
    return assign


def extend_greedily(instance: Instance, schedule: Schedule, orders: Sequence[int]) -> Schedule:
    """Continue the value-ratio pass from a partial schedule for the listed orders."""
    return Schedule(_single_pass(instance, sorted(set(orders)), pair_values(instance),
                                 schedule.assignment))


def greedy_schedule(instance: Instance, orders: Sequence[int] | None = None
                    ) -> tuple[Schedule, list[int], list[int]]:
    """Run the remove-and-repeat greedy; returns (schedule, satisfied, removed) order positions."""
    active = list(range(instance.n_orders)) if orders is None else sorted(set(orders))
    V = pair_values(instance)
    removed: list[int] = []
    while True:
        assign = _single_pass(instance, active, V)
        imp = np.zeros(instance.n_orders)
        sold = assign != UNSOLD
        np.add.at(imp, assign[sold], instance.impressions[assign[sold], np.flatnonzero(sold)])
        short = [a for a in active if imp[a] < instance.targets[a]]
        if not short:
            return Schedule(assign), active, sorted(removed)
        removed.extend(short)
        active = [a for a in active if a not in short]


def fill_unsold(instance: Instance, schedule: Schedule, orders: Sequence[int]) -> Schedule:
    """Sell free slots, dearest first, to listed orders that can still afford them.

    Adding slots never lowers an order's impressions, so a feasible schedule
    stays feasible as long as budgets and the back-to-back rule hold.
    """
    assign = schedule.assignment.copy()
    allowed = np.zeros(instance.n_orders, bool)
    allowed[list(orders)] = True
    P = instance.prices
    sold = assign != UNSOLD
    spend = np.bincount(assign[sold], weights=P[sold], minlength=instance.n_orders)
    neighbours: dict[int, list[int]] = {}
    for s0, s1 in instance.adjacent_pairs:
        neighbours.setdefault(int(s0), []).append(int(s1))
        neighbours.setdefault(int(s1), []).append(int(s0))
    for s in np.lexsort((np.arange(instance.n_slots), -P)):
        if assign[s] != UNSOLD:
            continue
        room = instance.budgets - spend - P[s]
        for a in np.argsort(-np.where(allowed, room, -np.inf), kind="stable"):
            if not allowed[a] or room[a] < -1e-9 * instance.budgets[a]:
                break
            if instance.forbid_consecutive[a] and any(assign[t] == a for t in neighbours.get(int(s), ())):
                continue
            assign[s] = a
            spend[a] += P[s]
            break
    return Schedule(assign)
