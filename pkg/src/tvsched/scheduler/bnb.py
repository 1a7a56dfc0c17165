"""LP-based best-first branch and bound for the slot assignment program.

Variables are x[a, s] in {0, 1} for every pair whose price fits the order's
budget, plus one indicator y[a] per order with

    sum_s P_s x[a, s] <= B_a y[a]        (budget, and no spend while y = 0)
    sum_s S[a, s] x[a, s] >= R_a y[a]    (goal, whenever the order runs)
    sum_a x[a, s] <= 1                   (one order per slot)
    x[a, s] + x[a, s'] <= 1              (back-to-back slots, flagged orders)

With ``require_all`` every y is fixed at 1, so each active order must reach
its goal. Otherwise orders may be left out, which is the conditional form
of the goal constraint: it binds only when the order is sold something.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .greedy import extend_greedily, fill_unsold, greedy_schedule, pair_values
from .instance import (
    UNSOLD,
    InfeasibleError,
    Instance,
    LimitError,
    Schedule,
    SchedulerError,
    SolverConfig,
    SolveReport,
    check_feasible,
    order_totals,
    revenue,
)
from .simplex import CUTOFF, INFEASIBLE, ITERATION_LIMIT, DualSimplex

INT_TOL = 1e-6
_REL = 1e-9


class _Model:
    def __init__(self, instance: Instance, orders: Sequence[int], require_all: bool,
                 perturb: float = 1e-7):
        self.instance = instance
        self.orders = np.array(sorted(set(orders)), dtype=np.int64)
        rows = self.orders
        P = instance.prices
        B = instance.budgets[rows]
        R = instance.targets[rows]
        S = instance.impressions[rows]
        pa, ps = np.nonzero(P[None, :] <= B[:, None] * (1 + _REL))
        self.pa, self.ps = pa, ps
        self.nx, self.ny = len(pa), len(rows)
        self.P, self.B, self.R = P, B, R
        self.S_pair = S[pa, ps]
        self.require_all = require_all

        r_idx, c_idx, vals = [], [], []
        row = 0
        slots_used = np.unique(ps)
        slot_row = {int(s): row + k for k, s in enumerate(slots_used)}
        row += len(slots_used)
        r_idx.append(np.array([slot_row[int(s)] for s in ps], dtype=np.int64))
        c_idx.append(np.arange(self.nx))
        vals.append(np.ones(self.nx))
        # budget rows
        r_idx += [row + pa, row + np.arange(self.ny)]
        c_idx += [np.arange(self.nx), self.nx + np.arange(self.ny)]
        vals += [P[ps], -B]
        row += self.ny
        # goal rows
        r_idx += [row + pa, row + np.arange(self.ny)]
        c_idx += [np.arange(self.nx), self.nx + np.arange(self.ny)]
        vals += [-self.S_pair, R]
        row += self.ny
        # back-to-back rows
        flat = {(int(a), int(s)): k for k, (a, s) in enumerate(zip(pa, ps))}
        adj = instance.adjacent_pairs
        forbid = instance.forbid_consecutive[rows]
        for a in np.flatnonzero(forbid):
            for s0, s1 in adj:
                k0, k1 = flat.get((int(a), int(s0))), flat.get((int(a), int(s1)))
                if k0 is not None and k1 is not None:
                    r_idx.append(np.array([row, row]))
                    c_idx.append(np.array([k0, k1]))
                    vals.append(np.ones(2))
                    row += 1
        self.n_rows = row
        n = self.nx + self.ny
        A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(r_idx), np.concatenate(c_idx))),
                          shape=(row, n))
        self.b = np.concatenate([np.ones(len(slots_used)), np.zeros(2 * self.ny),
                                 np.ones(row - len(slots_used) - 2 * self.ny)])
        c = np.concatenate([-P[ps], np.zeros(self.ny)])
        self.lp = DualSimplex(c, A, perturb=perturb)
        self.lo = np.zeros(n)
        self.hi = np.ones(n)
        if require_all:
            self.lo[self.nx:] = 1.0

        # neighbour lists for the repair heuristic
        self.neighbours: dict[int, list[int]] = {}
        for s0, s1 in adj:
            self.neighbours.setdefault(int(s0), []).append(int(s1))
            self.neighbours.setdefault(int(s1), []).append(int(s0))
        self.forbid = forbid
        self.V_pair = pair_values(instance)[rows][pa, ps]

    def bounds(self, fixings) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.lo.copy(), self.hi.copy()
        for var, val in fixings:
            lo[var] = hi[var] = val
        return lo, hi

    def totals(self, xv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        spend = np.bincount(self.pa, weights=self.P[self.ps] * xv, minlength=self.ny)
        imp = np.bincount(self.pa, weights=self.S_pair * xv, minlength=self.ny)
        return spend, imp

    def to_schedule(self, xv: np.ndarray) -> Schedule:
        assign = np.full(self.instance.n_slots, UNSOLD)
        on = xv > 0.5
        assign[self.ps[on]] = self.orders[self.pa[on]]
        return Schedule(assign)

    # -- primal heuristic --------------------------------------------------

    def _conflict(self, assign, a_global, local, s) -> bool:
        if not self.forbid[local]:
            return False
        return any(assign[t] == a_global for t in self.neighbours.get(s, ()))

    def repair(self, priority: np.ndarray, fixed_on: np.ndarray | None = None) -> Schedule | None:
        """Round the LP point into a feasible schedule, or None if that fails.

        Keeps the integral part, completes short orders with the value-ratio
        pass, adds the remaining LP mass by weight, drops orders still short
        (when allowed) and finally sells what is left.
        """
        inst = self.instance
        P, B = self.P, self.B
        assign = np.full(inst.n_slots, UNSOLD)
        spend = np.zeros(self.ny)

        def take(k):
            a, s = self.pa[k], self.ps[k]
            g = self.orders[a]
            if assign[s] != UNSOLD or spend[a] + P[s] > B[a] * (1 + _REL):
                return
            if self._conflict(assign, g, a, s):
                return
            assign[s] = g
            spend[a] += P[s]

        idx = np.arange(self.nx)
        if fixed_on is not None:
            for k in np.flatnonzero(fixed_on):
                take(k)
        for k in np.flatnonzero(priority > 1 - INT_TOL):
            take(k)
        live = (priority > 1e-6) & (priority <= 1 - INT_TOL)
        if self.require_all:
            assign = extend_greedily(inst, Schedule(assign), self.orders).assignment.copy()
            spend = np.bincount(np.searchsorted(self.orders, assign[assign != UNSOLD]),
                                weights=inst.prices[assign != UNSOLD], minlength=self.ny)
        for k in idx[live][np.lexsort((idx[live], -priority[live]))]:
            take(k)
        sched = Schedule(assign)
        spend_g, imp_g = order_totals(inst, sched)
        started = [g for g in self.orders if spend_g[g] > 0 or self.require_all]
        sched = extend_greedily(inst, sched, started)
        spend_g, imp_g = order_totals(inst, sched)
        short = imp_g < inst.targets * (1 - _REL)
        assign = sched.assignment.copy()
        if self.require_all:
            if short[self.orders].any():
                return None
        else:
            for g in self.orders[short[self.orders] & (spend_g[self.orders] > 0)]:
                assign[assign == g] = UNSOLD
        sched = Schedule(assign)
        spend_g, imp_g = order_totals(inst, sched)
        served = [g for g in self.orders
                  if imp_g[g] >= inst.targets[g] * (1 - _REL) and (spend_g[g] > 0 or self.require_all
                                                                 or inst.targets[g] == 0)]
        return fill_unsold(inst, sched, served)


def _fractional_choice(model: _Model, x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> int | None:
    """Variable to branch on, or None if ``x`` already encodes a feasible schedule."""
    xv, yv = x[:model.nx], x[model.nx:]
    spend, imp = model.totals(xv)
    free_y = lo[model.nx:] < hi[model.nx:]
    violated = free_y & (spend > INT_TOL) & (imp < model.R * (1 - INT_TOL))
    if violated.any():
        cand = np.flatnonzero(violated)
        dist = np.abs(yv[cand] - 0.5)
        return model.nx + int(cand[np.argmin(dist)])
    frac = np.minimum(xv, 1 - xv)
    if frac.size and frac.max() > INT_TOL:
        return int(np.argmin(np.where(frac > INT_TOL, np.abs(xv - 0.5), np.inf)))
    return None


@dataclass
class _Node:
    bound: float
    depth: int
    fixings: tuple
    basis: object


def lp_relaxation(instance: Instance, active_orders: Sequence[int] | None = None,
                  max_iter: int = 50_000) -> tuple[np.ndarray, float]:
    """Fractional optimum with every active order held to its goal.

    Returns the (n_orders, n_slots) matrix X in [0, 1] and the revenue bound.
    """
    orders = range(instance.n_orders) if active_orders is None else active_orders
    model = _Model(instance, orders, require_all=True, perturb=0.0)
    res = model.lp.solve(model.b, model.lo, model.hi, max_iter=max_iter)
    if res.status == INFEASIBLE:
        raise InfeasibleError("relaxation is infeasible for the active orders")
    if res.status == ITERATION_LIMIT:
        raise SchedulerError("simplex iteration limit exceeded")
    X = np.zeros((instance.n_orders, instance.n_slots))
    X[model.orders[model.pa], model.ps] = res.x[:model.nx]
    return X, -res.objective


def branch_and_bound(instance: Instance, active_orders: Sequence[int] | None = None,
                     config: SolverConfig | None = None, incumbent: Schedule | None = None,
                     require_all: bool = False) -> SolveReport:
    """Maximise revenue over the active orders.

    By default an order may go unserved (reported rejected as ``triaged``);
    with ``require_all`` every active order must reach its goal and
    InfeasibleError is raised when that is impossible. LimitError signals a
    limit hit before any feasible schedule was known.
    """
    config = config or SolverConfig()
    t0 = time.perf_counter()
    active = list(range(instance.n_orders)) if active_orders is None else sorted(set(active_orders))
    model = _Model(instance, active, require_all)
    tol = config.lp_tolerance
    deadline = t0 + config.time_limit_ms / 1000.0

    best_rev = -np.inf
    best: Schedule | None = None

    def offer(s: Schedule | None):
        nonlocal best, best_rev
        if s is None:
            return
        rep = check_feasible(instance, s)
        if not rep.feasible:
            return
        if require_all:
            spend, imp = order_totals(instance, s)
            if (imp[active] < instance.targets[active] * (1 - _REL)).any():
                return
        if set(np.unique(s.assignment[s.sold()])) - set(active):
            return
        r = revenue(instance, s)
        if r > best_rev + tol * max(1.0, abs(best_rev) if np.isfinite(best_rev) else 1.0):
            best, best_rev = s, r

    if incumbent is not None:
        offer(incumbent)
    g, satisfied, removed = greedy_schedule(instance, active)
    if not require_all or not removed:
        offer(g)
        offer(fill_unsold(instance, g, satisfied))
    if not require_all:
        offer(Schedule.empty(instance.n_slots))

    def prune_level() -> float:
        if not np.isfinite(best_rev):
            return -np.inf
        return best_rev + max(tol * max(1.0, abs(best_rev)), config.gap_tolerance * abs(best_rev))

    # Largest bound discarded only because of the gap allowance.
    window_bound = -np.inf

    def discard(bound: float) -> None:
        nonlocal window_bound
        if bound > best_rev:
            window_bound = max(window_bound, min(bound, prune_level()))

    heap: list = []
    counter = 0
    heapq.heappush(heap, (-np.inf, 0, counter, _Node(np.inf, 0, (), None)))
    root_bound = None
    nodes = 0
    status = "optimal"
    open_bound = -np.inf
    while heap:
        if nodes >= config.node_limit or time.perf_counter() > deadline:
            status = "limit"
            open_bound = max(n.bound for *_, n in heap)
            break
        _, _, _, node = heapq.heappop(heap)
        if node.bound <= prune_level():
            discard(node.bound)
            continue
        nodes += 1
        lo, hi = model.bounds(node.fixings)
        cutoff = -prune_level() if np.isfinite(best_rev) else np.inf
        res = model.lp.solve(model.b, lo, hi, warm=node.basis, cutoff=cutoff)
        if res.status == ITERATION_LIMIT:
            raise SchedulerError("simplex iteration limit exceeded")
        if res.status == INFEASIBLE:
            if root_bound is None:
                root_bound = -np.inf
            continue
        if res.status == CUTOFF:
            discard(node.bound)
            continue
        bound = -res.bound
        if root_bound is None:
            root_bound = bound
        if bound <= prune_level():
            discard(bound)
            continue
        x = res.x
        fixed_on = np.zeros(model.nx, bool)
        for var, val in node.fixings:
            if var < model.nx and val == 1:
                fixed_on[var] = True
        offer(model.repair(x[:model.nx], fixed_on))
        var = _fractional_choice(model, x, lo, hi)
        if var is None:
            offer(model.to_schedule(x[:model.nx]))
            continue
        for val in (1.0, 0.0):
            counter += 1
            child = _Node(bound, node.depth + 1, node.fixings + ((var, val),), res.basis)
            heapq.heappush(heap, (-bound, -child.depth, counter, child))

    if best is None:
        if status == "limit":
            raise LimitError("limit reached before any feasible schedule was found")
        raise InfeasibleError("no schedule satisfies every active order")

    if status == "limit":
        best_bound = max(best_rev, open_bound, window_bound)
    else:
        best_bound = max(best_rev, window_bound)
        if best_bound > best_rev + tol * max(1.0, abs(best_rev)):
            status = "gap"
    spend, imp = order_totals(instance, best)
    accepted = tuple(instance.order_ids[a] for a in active
                     if spend[a] > 0 or instance.targets[a] == 0 or require_all)
    rejected = {instance.order_ids[a]: "triaged" for a in active
                if instance.order_ids[a] not in accepted}
    rejected.update({oid: "inactive" for k, oid in enumerate(instance.order_ids) if k not in active})
    return SolveReport(
        schedule=best,
        revenue=best_rev,
        accepted=accepted,
        rejected=rejected,
        lp_upper_bound=root_bound if root_bound is not None else best_rev,
        best_bound=best_bound,
        nodes_explored=nodes,
        wall_time=time.perf_counter() - t0,
        status=status,
    )
