"""Scheduling instances, schedules, solver settings and constraint checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from ..viewdata.model import N_CELLS, Order, SlotCatalog

UNSOLD = -1


class SchedulerError(ValueError):
    pass


class InfeasibleError(SchedulerError):
    """No schedule satisfies every active order."""


class LimitError(SchedulerError):
    """A time or node limit ran out before any feasible schedule was found."""


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Instance:
    """One scheduling problem.

    ``impressions[a, s]`` is the forecast audience of slot ``s`` within order
    ``a``'s demographics. Slots are a flat list over channels; consecutive
    means same channel and adjacent slot index.
    """

    slot_ids: tuple[str, ...]
    channels: tuple[str, ...]
    slot_index: np.ndarray
    prices: np.ndarray
    order_ids: tuple[str, ...]
    budgets: np.ndarray
    targets: np.ndarray
    impressions: np.ndarray
    forbid_consecutive: np.ndarray = None

    def __post_init__(self):
        n = len(self.slot_ids)
        A = len(self.order_ids)
        object.__setattr__(self, "slot_ids", tuple(self.slot_ids))
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "order_ids", tuple(self.order_ids))
        object.__setattr__(self, "slot_index", _frozen(self.slot_index, np.int64))
        object.__setattr__(self, "prices", _frozen(self.prices, float))
        object.__setattr__(self, "budgets", _frozen(self.budgets, float))
        object.__setattr__(self, "targets", _frozen(self.targets, float))
        object.__setattr__(self, "impressions", _frozen(np.reshape(self.impressions, (A, n)), float))
        fc = np.zeros(A, bool) if self.forbid_consecutive is None else self.forbid_consecutive
        object.__setattr__(self, "forbid_consecutive", _frozen(fc, bool))
        if len(self.channels) != n or self.slot_index.shape != (n,) or self.prices.shape != (n,):
            raise SchedulerError("slot arrays have inconsistent lengths")
        if self.budgets.shape != (A,) or self.targets.shape != (A,) or self.forbid_consecutive.shape != (A,):
            raise SchedulerError("order arrays have inconsistent lengths")
        if len(set(self.slot_ids)) != n or len(set(self.order_ids)) != A:
            raise SchedulerError("slot and order ids must be unique")
        if not (self.prices > 0).all():
            raise SchedulerError("slot prices must be positive")
        if not (self.budgets > 0).all() or (self.targets < 0).any():
            raise SchedulerError("budgets must be positive and targets non-negative")
        if not np.isfinite(self.impressions).all() or (self.impressions < 0).any():
            raise SchedulerError("impressions must be finite and non-negative")

    @property
    def n_slots(self) -> int:
        return len(self.slot_ids)

    @property
    def n_orders(self) -> int:
        return len(self.order_ids)

    @cached_property
    def adjacent_pairs(self) -> np.ndarray:
        """(k, 2) array of flat slot pairs that air back to back on one channel."""
        where = {(c, int(i)): s for s, (c, i) in enumerate(zip(self.channels, self.slot_index))}
        pairs = [(s, where[(c, int(i) + 1)])
                 for s, (c, i) in enumerate(zip(self.channels, self.slot_index))
                 if (c, int(i) + 1) in where]
        return np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)

    def order_position(self, order_id: str) -> int:
        try:
            return self.order_ids.index(order_id)
        except ValueError:
            raise SchedulerError(f"unknown order {order_id!r}") from None

    def subset(self, orders: Sequence[int]) -> "Instance":
        idx = list(orders)
        return Instance(self.slot_ids, self.channels, self.slot_index, self.prices,
                        [self.order_ids[a] for a in idx], self.budgets[idx], self.targets[idx],
                        self.impressions[idx], self.forbid_consecutive[idx])


def build_instance(catalog: SlotCatalog, orders: Sequence[Order],
                   cell_impressions: Mapping[str, np.ndarray] | np.ndarray) -> Instance:
    """Combine a slot catalog, orders and per-cell slot forecasts.

    ``cell_impressions`` is either an (n_slots, 30) array aligned with the
    catalog or a mapping from slot id to a 30-vector.
    """
    slots = catalog.slots
    if isinstance(cell_impressions, Mapping):
        missing = [s.slot_id for s in slots if s.slot_id not in cell_impressions]
        if missing:
            raise SchedulerError(f"no forecast for slot {missing[0]}")
        cells = np.array([np.asarray(cell_impressions[s.slot_id], float) for s in slots])
    else:
        cells = np.asarray(cell_impressions, dtype=float)
    cells = cells.reshape(len(slots), N_CELLS) if cells.size else np.zeros((len(slots), N_CELLS))
    S = np.array([cells @ o.mask for o in orders]).reshape(len(orders), len(slots))
    return Instance(
        slot_ids=[s.slot_id for s in slots],
        channels=[s.channel_id for s in slots],
        slot_index=[s.slot_index for s in slots],
        prices=[s.price for s in slots],
        order_ids=[o.order_id for o in orders],
        budgets=[o.budget for o in orders],
        targets=[o.target_impressions for o in orders],
        impressions=S,
        forbid_consecutive=[o.forbid_consecutive for o in orders],
    )


@dataclass(frozen=True, eq=False)
class Schedule:
    """Slot to order assignment: ``assignment[s]`` is an order position or UNSOLD."""

    assignment: np.ndarray

    def __post_init__(self):
        a = _frozen(self.assignment, np.int64)
        if a.ndim != 1 or (a < UNSOLD).any():
            raise SchedulerError("assignment must be a 1-D array of order positions or -1")
        object.__setattr__(self, "assignment", a)

    @classmethod
    def empty(cls, n_slots: int) -> "Schedule":
        return cls(np.full(n_slots, UNSOLD))

    def __eq__(self, other):
        return isinstance(other, Schedule) and np.array_equal(self.assignment, other.assignment)

    def __hash__(self):
        return hash(self.assignment.tobytes())

    def sold(self) -> np.ndarray:
        return self.assignment != UNSOLD

    def slots_of(self, order: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == order)

    def as_mapping(self, instance: Instance) -> dict[str, str | None]:
        return {sid: (instance.order_ids[a] if a != UNSOLD else None)
                for sid, a in zip(instance.slot_ids, self.assignment)}

    def as_matrix(self, n_orders: int) -> np.ndarray:
        X = np.zeros((n_orders, self.assignment.size), dtype=np.int8)
        sold = self.sold()
        X[self.assignment[sold], np.flatnonzero(sold)] = 1
        return X


def order_totals(instance: Instance, schedule: Schedule) -> tuple[np.ndarray, np.ndarray]:
    """Per-order (spend, impressions)."""
    a = schedule.assignment
    sold = a != UNSOLD
    spend = np.bincount(a[sold], weights=instance.prices[sold], minlength=instance.n_orders)
    imp = np.zeros(instance.n_orders)
    cols = np.flatnonzero(sold)
    np.add.at(imp, a[sold], instance.impressions[a[sold], cols])
    return spend, imp


def revenue(instance: Instance, schedule: Schedule) -> float:
    sold = schedule.sold()
    return float(instance.prices[sold].sum())


@dataclass(frozen=True)
class OrderCheck:
    order_id: str
    spend: float
    impressions: float
    budget: float
    target: float
    budget_ok: bool
    target_ok: bool       # vacuous when spend is zero
    consecutive_ok: bool

    @property
    def ok(self) -> bool:
        return self.budget_ok and self.target_ok and self.consecutive_ok


@dataclass(frozen=True)
class FeasibilityReport:
    orders: tuple[OrderCheck, ...]
    overlap_ok: bool

    @property
    def feasible(self) -> bool:
        return self.overlap_ok and all(o.ok for o in self.orders)

    def violations(self) -> list[str]:
        out = [] if self.overlap_ok else ["slot assigned to an unknown order"]
        for o in self.orders:
            if not o.budget_ok:
                out.append(f"order {o.order_id}: spend {o.spend:g} exceeds budget {o.budget:g}")
            if not o.target_ok:
                out.append(f"order {o.order_id}: impressions {o.impressions:g} below target {o.target:g}")
            if not o.consecutive_ok:
                out.append(f"order {o.order_id}: consecutive airings")
        return out


def check_feasible(instance: Instance, schedule: Schedule, rel_tol: float = 1e-9) -> FeasibilityReport:
    """Evaluate budget, target, overlap and no-consecutive constraints per order."""
    a = schedule.assignment
    if a.shape != (instance.n_slots,):
        raise SchedulerError(f"schedule covers {a.size} slots, instance has {instance.n_slots}")
    overlap_ok = bool((a < instance.n_orders).all())
    a = np.where(a < instance.n_orders, a, UNSOLD)
    spend, imp = order_totals(instance, Schedule(a))
    pairs = instance.adjacent_pairs
    checks = []
    for k, oid in enumerate(instance.order_ids):
        B, R = instance.budgets[k], instance.targets[k]
        consecutive_ok = True
        if instance.forbid_consecutive[k] and len(pairs):
            consecutive_ok = not bool(((a[pairs[:, 0]] == k) & (a[pairs[:, 1]] == k)).any())
        checks.append(OrderCheck(
            oid, float(spend[k]), float(imp[k]), float(B), float(R),
            budget_ok=bool(spend[k] <= B * (1 + rel_tol)),
            target_ok=bool(spend[k] == 0 or imp[k] >= R * (1 - rel_tol)),
            consecutive_ok=consecutive_ok,
        ))
    return FeasibilityReport(tuple(checks), overlap_ok)


@dataclass(frozen=True)
class SolverConfig:
    time_limit_ms: int = 120_000
    node_limit: int = 200_000
    lp_tolerance: float = 1e-7
    gap_tolerance: float = 0.0            # stop once (bound - incumbent) <= gap * incumbent
    mc_samples: int | None = None         # None: scaled to instance size
    mc_bernoulli_p: float | None = None   # None: matched to each order's target
    combine_weight: float = 0.0
    round_time_limit_ms: int | None = None  # per triage round; None: time_limit_ms
    seed: int = 0

    def __post_init__(self):
        if self.time_limit_ms <= 0 or self.node_limit <= 0 or self.lp_tolerance <= 0:
            raise SchedulerError("limits and lp_tolerance must be positive")
        if self.gap_tolerance < 0:
            raise SchedulerError("gap_tolerance must be non-negative")
        if self.mc_samples is not None and self.mc_samples < 1:
            raise SchedulerError("mc_samples must be >= 1")
        if self.mc_bernoulli_p is not None and not 0 < self.mc_bernoulli_p < 1:
            raise SchedulerError("mc_bernoulli_p must lie in (0, 1)")
        if not 0 <= self.combine_weight <= 1:
            raise SchedulerError("combine_weight must lie in [0, 1]")
        if self.round_time_limit_ms is not None and self.round_time_limit_ms <= 0:
            raise SchedulerError("round_time_limit_ms must be positive")

    @classmethod
    def from_dict(cls, d: Mapping) -> "SolverConfig":
        allowed = set(cls.__dataclass_fields__)
        unknown = set(d) - allowed
        if unknown:
            raise SchedulerError(f"unknown solver config keys: {sorted(unknown)}")
        return cls(**dict(d))

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class SolveReport:
    schedule: Schedule
    revenue: float
    accepted: tuple[str, ...]
    rejected: dict = field(default_factory=dict)   # order id -> reason
    lp_upper_bound: float = np.inf                 # root relaxation
    best_bound: float = np.inf                     # proven bound at termination
    nodes_explored: int = 0
    wall_time: float = 0.0
    status: str = "optimal"                        # optimal | gap | limit
    rounds: int = 1
    order_values: dict = field(default_factory=dict)   # order id -> combined value (triage)

    @property
    def gap(self) -> float:
        if self.revenue <= 0:
            return 0.0 if self.best_bound <= 0 else np.inf
        return max(0.0, (self.best_bound - self.revenue) / self.revenue)
