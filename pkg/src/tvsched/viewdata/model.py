"""Core data types for hourly demographic viewership."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Iterable, Sequence

import numpy as np

# Age bands are a labelling convention; only the 15 x 2 layout matters downstream.
AGE_BANDS = (
    "2-5", "6-8", "9-11", "12-14", "15-17", "18-20", "21-24", "25-29",
    "30-34", "35-39", "40-44", "45-49", "50-54", "55-64", "65+",
)
N_BANDS = len(AGE_BANDS)
N_CELLS = 2 * N_BANDS
ONE_HOUR = timedelta(hours=1)


class DataError(ValueError):
    """Raised for malformed or inconsistent viewership data."""


@dataclass(frozen=True, order=True)
class DemographicCell:
    gender: str
    band_index: int

    def __post_init__(self):
        if self.gender not in ("M", "F"):
            raise ValueError(f"gender must be 'M' or 'F', got {self.gender!r}")
        if not 1 <= self.band_index <= N_BANDS:
            raise ValueError(f"band_index must be in 1..{N_BANDS}, got {self.band_index}")

    @property
    def code(self) -> str:
        return f"{self.gender}{self.band_index:02d}"

    @property
    def index(self) -> int:
        """Position in the 30-vector: M01..M15 then F01..F15."""
        offset = 0 if self.gender == "M" else N_BANDS
        return offset + self.band_index - 1

    @property
    def age_band(self) -> str:
        return AGE_BANDS[self.band_index - 1]

    @classmethod
    def from_code(cls, code: str) -> "DemographicCell":
        code = code.strip()
        if len(code) != 3 or code[0] not in "MF" or not code[1:].isdigit():
            raise ValueError(f"unknown demographic column {code!r}")
        return cls(code[0], int(code[1:]))

    @classmethod
    def from_index(cls, index: int) -> "DemographicCell":
        if not 0 <= index < N_CELLS:
            raise ValueError(f"cell index out of range: {index}")
        gender = "M" if index < N_BANDS else "F"
        return cls(gender, index % N_BANDS + 1)


ALL_CELLS: tuple[DemographicCell, ...] = tuple(
    DemographicCell.from_index(i) for i in range(N_CELLS)
)
CELL_CODES: tuple[str, ...] = tuple(c.code for c in ALL_CELLS)


def cell_mask(cells: Iterable[DemographicCell | str]) -> np.ndarray:
    """Boolean 30-vector selecting the given cells."""
    mask = np.zeros(N_CELLS, dtype=bool)
    for c in cells:
        if isinstance(c, str):
            c = DemographicCell.from_code(c)
        mask[c.index] = True
    return mask


@dataclass(frozen=True)
class ViewershipRecord:
    timestamp: datetime
    channel_id: str
    program_id: str
    impressions: np.ndarray  # shape (30,), int64; meaningless when missing
    missing: bool = False

    def __post_init__(self):
        counts = np.asarray(self.impressions, dtype=np.int64)
        if counts.shape != (N_CELLS,):
            raise DataError(f"expected {N_CELLS} counts, got shape {counts.shape}")
        if not self.missing and (counts < 0).any():
            raise DataError("impression counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "impressions", counts)

    @property
    def total(self) -> int:
        return int(self.impressions.sum())

    @property
    def day_of_week(self) -> int:
        return self.timestamp.weekday()

    @property
    def hour(self) -> int:
        return self.timestamp.hour


@dataclass(frozen=True)
class ViewershipSeries:
    channel_id: str
    records: tuple[ViewershipRecord, ...]

    def __post_init__(self):
        recs = tuple(self.records)
        object.__setattr__(self, "records", recs)
        for prev, cur in zip(recs, recs[1:]):
            if cur.timestamp - prev.timestamp != ONE_HOUR:
                raise DataError(
                    f"records must be spaced exactly one hour apart "
                    f"({prev.timestamp.isoformat()} -> {cur.timestamp.isoformat()})"
                )
        for r in recs:
            if r.channel_id != self.channel_id:
                raise DataError(f"record channel {r.channel_id!r} != series channel {self.channel_id!r}")

    @property
    def span_hours(self) -> int:
        return len(self.records)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def start(self) -> datetime:
        return self.records[0].timestamp

    @property
    def missing_mask(self) -> np.ndarray:
        return np.array([r.missing for r in self.records], dtype=bool)

    def counts(self) -> np.ndarray:
        """(T, 30) count matrix; rows of missing records are zero."""
        out = np.zeros((len(self.records), N_CELLS), dtype=np.int64)
        for t, r in enumerate(self.records):
            if not r.missing:
                out[t] = r.impressions
        return out

    def totals(self, mask: np.ndarray | None = None) -> np.ndarray:
        """Hourly impressions (optionally restricted to a cell mask) as floats, NaN where missing."""
        c = self.counts().astype(float)
        if mask is not None:
            c = c[:, np.asarray(mask, dtype=bool)]
        tot = c.sum(axis=1)
        tot[self.missing_mask] = np.nan
        return tot

    def __eq__(self, other):
        if not isinstance(other, ViewershipSeries):
            return NotImplemented
        if self.channel_id != other.channel_id or len(self) != len(other):
            return False
        for a, b in zip(self.records, other.records):
            if (a.timestamp, a.missing) != (b.timestamp, b.missing):
                return False
            # a missing record carries neither counts nor a program
            if not a.missing and (a.program_id != b.program_id
                                  or not np.array_equal(a.impressions, b.impressions)):
                return False
        return True

    __hash__ = None


@dataclass(frozen=True)
class Order:
    order_id: str
    budget: float
    target_impressions: float
    demographics: frozenset = field(default_factory=frozenset)
    reach_target: float | None = None
    forbid_consecutive: bool = False

    def __post_init__(self):
        cells = frozenset(
            DemographicCell.from_code(c) if isinstance(c, str) else c for c in self.demographics
        )
        object.__setattr__(self, "demographics", cells)
        if not self.budget > 0:
            raise DataError(f"order {self.order_id}: budget must be > 0")
        if not self.target_impressions > 0:
            raise DataError(f"order {self.order_id}: target_impressions must be > 0")
        if not cells:
            raise DataError(f"order {self.order_id}: demographics must be non-empty")

    @property
    def mask(self) -> np.ndarray:
        return cell_mask(self.demographics)


@dataclass(frozen=True)
class Slot:
    channel_id: str
    slot_index: int
    timestamp: datetime
    price: float

    @property
    def slot_id(self) -> str:
        return f"{self.channel_id}:{self.slot_index}"


@dataclass(frozen=True)
class SlotCatalog:
    slots: tuple[Slot, ...]

    def __post_init__(self):
        slots = tuple(self.slots)
        object.__setattr__(self, "slots", slots)
        seen = set()
        per_channel: dict[str, list[int]] = {}
        for s in slots:
            if not s.price > 0:
                raise DataError(f"slot {s.slot_id}: price must be > 0")
            key = (s.channel_id, s.slot_index)
            if key in seen:
                raise DataError(f"duplicate slot {s.slot_id}")
            seen.add(key)
            per_channel.setdefault(s.channel_id, []).append(s.slot_index)
        for ch, idx in per_channel.items():
            if sorted(idx) != list(range(1, len(idx) + 1)):
                raise DataError(f"slot indices on channel {ch} must be contiguous from 1")

    def __len__(self) -> int:
        return len(self.slots)

    @property
    def prices(self) -> np.ndarray:
        return np.array([s.price for s in self.slots], dtype=float)


@dataclass(frozen=True)
class Panel:
    """Viewer-level viewing events, keyed by slot id ``channel:index``.

    ``audiences`` maps each slot id to a sorted int64 array of viewer ids.
    ``viewer_cells`` optionally records each viewer's demographic cell index.
    """

    audiences: dict
    viewer_count: int
    viewer_cells: np.ndarray | None = None

    def audience(self, slot_id: str) -> np.ndarray:
        return self.audiences.get(slot_id, np.empty(0, dtype=np.int64))

    @property
    def slot_ids(self) -> list[str]:
        return list(self.audiences)

    @property
    def event_count(self) -> int:
        return int(sum(len(v) for v in self.audiences.values()))


def make_panel(events: Iterable[tuple[str, int]], viewer_count: int | None = None,
               viewer_cells: Sequence[int] | None = None) -> Panel:
    """Build a Panel from ``(slot_id, viewer_id)`` pairs; duplicates collapse."""
    buckets: dict[str, set[int]] = {}
    top = -1
    for slot_id, viewer in events:
        buckets.setdefault(slot_id, set()).add(int(viewer))
        top = max(top, int(viewer))
    audiences = {k: np.array(sorted(v), dtype=np.int64) for k, v in buckets.items()}
    count = viewer_count if viewer_count is not None else top + 1
    cells = None if viewer_cells is None else np.asarray(viewer_cells, dtype=np.int64)
    return Panel(audiences=audiences, viewer_count=int(count), viewer_cells=cells)
