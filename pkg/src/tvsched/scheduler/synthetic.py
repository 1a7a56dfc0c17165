"""Synthetic scheduling inputs: a sales-desk-sized week and random small cases."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from ..viewdata.model import AGE_BANDS, N_CELLS, DemographicCell, Order, Slot, SlotCatalog, cell_mask
from .instance import Instance, build_instance
from .values import knapsack_capacity


@dataclass(frozen=True)
class DeskInputs:
    catalog: SlotCatalog
    orders: tuple[Order, ...]
    cell_impressions: np.ndarray   # (n_slots, 30), aligned with the catalog

    def instance(self) -> Instance:
        return build_instance(self.catalog, self.orders, self.cell_impressions)


def _diurnal(hour: np.ndarray) -> np.ndarray:
    # low in the morning, peak around 21:00
    return 0.35 + 0.65 * np.exp(-0.5 * ((hour - 21.0) / 3.0) ** 2) + 0.15 * np.exp(
        -0.5 * ((hour - 8.0) / 1.5) ** 2)


def desk_inputs(seed: int, n_channels: int = 3, n_days: int = 5, n_hours: int = 19,
                n_orders: int = 49, first_hour: int = 5, demand: float = 1.25,
                start: str = "2014-10-27T00:00", forbid_fraction: float = 0.0) -> DeskInputs:
    """One selling week: ``n_channels`` x ``n_days`` x ``n_hours`` slots and random orders.

    Budgets add up to ``demand`` times the value of the whole inventory, so
    the desk is oversold. Each goal is a random share (30-80%) of what the
    order could buy with its budget at its own best impressions-per-price rate.
    """
    rng = np.random.default_rng(seed)
    t0 = datetime.fromisoformat(start)
    hours = first_hour + np.arange(n_hours)
    cell_base = rng.dirichlet(np.full(N_CELLS, 4.0))
    slots, cells = [], []
    for c in range(n_channels):
        ch = f"{c + 1:02d}"
        scale = rng.uniform(20_000, 60_000)
        tilt = rng.dirichlet(np.full(N_CELLS, 8.0))
        mix = 0.5 * cell_base + 0.5 * tilt
        k = 0
        for d in range(n_days):
            for h in hours:
                k += 1
                level = scale * _diurnal(np.array(float(h))) * rng.lognormal(0.0, 0.15)
                counts = np.round(level * mix * rng.lognormal(0.0, 0.1, N_CELLS))
                total = counts.sum()
                price = float(max(1.0, round(total / 1000.0)))
                ts = t0 + timedelta(days=int(d), hours=int(h))
                slots.append(Slot(ch, k, ts, price))
                cells.append(counts)
    catalog = SlotCatalog(tuple(slots))
    cells = np.array(cells)
    P = catalog.prices
    budgets = rng.dirichlet(np.full(n_orders, 3.0)) * demand * P.sum()
    orders = []
    n_bands = len(AGE_BANDS)
    for a in range(n_orders):
        lo = int(rng.integers(0, n_bands - 3))
        hi = int(rng.integers(lo + 2, min(n_bands, lo + 7) + 1))
        genders = ["M", "F"] if rng.random() < 0.6 else [str(rng.choice(["M", "F"]))]
        demo = frozenset(DemographicCell(g, b) for g in genders for b in range(lo + 1, hi + 1))
        S = cells @ cell_mask(demo)
        B = float(np.floor(max(budgets[a], 2 * P.max())))
        reach = knapsack_capacity(S, P, B)
        R = float(np.floor(rng.uniform(0.3, 0.8) * reach))
        orders.append(Order(f"A{a + 1:03d}", B, max(R, 1.0), demo,
                            forbid_consecutive=bool(rng.random() < forbid_fraction)))
    return DeskInputs(catalog, tuple(orders), cells)


def desk_example() -> DeskInputs:
    """Two slots priced 10 and 20, two orders competing for them.

    Order A (budget 30, goal 100) needs both slots; order B (budget 15, goal
    50) is satisfied by the first. The best schedule sells both to A.
    """
    t0 = datetime(2014, 10, 27, 20)
    catalog = SlotCatalog((Slot("01", 1, t0, 10.0), Slot("01", 2, t0 + timedelta(hours=1), 20.0)))
    cells = np.zeros((2, N_CELLS))
    cells[0, 0], cells[1, 0] = 60, 50
    demo = frozenset({DemographicCell("M", 1)})
    orders = (Order("A", 30.0, 100.0, demo), Order("B", 15.0, 50.0, demo))
    return DeskInputs(catalog, orders, cells)


def random_small_instance(rng: np.random.Generator, max_vars: int = 20,
                          max_assignments: int = 300_000) -> Instance:
    """Instance with orders x slots <= ``max_vars`` for exhaustive checks."""
    while True:
        A = int(rng.integers(1, 6))
        n = int(rng.integers(1, max_vars // A + 1))
        if A * n <= max_vars and (A + 1) ** n <= max_assignments:
            break
    channels = [f"c{k % 2}" for k in range(n)]
    seen: dict[str, int] = {}
    index = []
    for c in channels:
        seen[c] = seen.get(c, 0) + 1
        index.append(seen[c])
    P = rng.integers(1, 20, size=n).astype(float)
    S = rng.integers(0, 100, size=(A, n)).astype(float)
    B = rng.integers(5, 60, size=A).astype(float)
    R = np.maximum(1.0, np.round(S.sum(axis=1) * rng.uniform(0.1, 0.8, size=A)))
    forbid = rng.random(A) < 0.3
    return Instance([f"{c}:{i}" for c, i in zip(channels, index)], channels, index, P,
                    [f"o{k}" for k in range(A)], B, R, S, forbid)
