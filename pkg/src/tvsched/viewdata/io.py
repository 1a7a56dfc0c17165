"""CSV/JSON readers and writers for viewership, panels, orders and slot catalogs."""

from __future__ import annotations

import csv
import json
from datetime import datetime
from pathlib import Path
from typing import Iterable

import numpy as np

from .model import (
    CELL_CODES,
    N_CELLS,
    ONE_HOUR,
    DataError,
    DemographicCell,
    Order,
    Panel,
    Slot,
    SlotCatalog,
    ViewershipRecord,
    ViewershipSeries,
    make_panel,
)

VIEWERSHIP_HEADER = ["timestamp", "channel_id", "program_id", *CELL_CODES]
PANEL_HEADER = ["slot_id", "viewer_id"]
CATALOG_HEADER = ["channel_id", "slot_index", "timestamp", "price"]


def parse_hour(text: str) -> datetime:
    try:
        ts = datetime.fromisoformat(text.strip())
    except ValueError as exc:
        raise DataError(f"bad timestamp {text!r}") from exc
    if ts.minute or ts.second or ts.microsecond:
        raise DataError(f"timestamp {text!r} is not on the hour")
    return ts.replace(tzinfo=None)


def format_hour(ts: datetime) -> str:
    return ts.strftime("%Y-%m-%dT%H:%M")


def _check_header(header: list[str], path) -> None:
    if header[:3] != VIEWERSHIP_HEADER[:3]:
        raise DataError(f"{path}:1: header must start with timestamp,channel_id,program_id")
    for col in header[3:]:
        try:
            DemographicCell.from_code(col)
        except ValueError:
            raise DataError(f"{path}:1: unknown demographic column {col!r}") from None
    if header[3:] != list(CELL_CODES):
        raise DataError(f"{path}:1: demographic columns must be {','.join(CELL_CODES)}")


def load_viewership_channels(path) -> dict[str, ViewershipSeries]:
    """Read a viewership CSV holding one or more channels.

    Absent hours inside a channel's span become missing records.
    """
    path = Path(path)
    rows: dict[str, list[tuple[datetime, str, np.ndarray]]] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        _check_header([h.strip() for h in header], path)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(VIEWERSHIP_HEADER):
                raise DataError(f"{path}:{lineno}: expected {len(VIEWERSHIP_HEADER)} fields, got {len(row)}")
            try:
                ts = parse_hour(row[0])
                counts = np.array([int(c) for c in row[3:]], dtype=np.int64)
            except (DataError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if (counts < 0).any():
                raise DataError(f"{path}:{lineno}: negative impression count")
            channel = row[1].strip()
            series_rows = rows.setdefault(channel, [])
            if series_rows and ts <= series_rows[-1][0]:
                raise DataError(f"{path}:{lineno}: non-monotone timestamp {row[0]} on channel {channel}")
            series_rows.append((ts, row[2].strip(), counts))
    if not rows:
        raise DataError(f"{path}: no data rows")

    out = {}
    for channel, items in rows.items():
        records = []
        for (ts, prog, counts), nxt in zip(items, items[1:] + [None]):
            records.append(ViewershipRecord(ts, channel, prog, counts))
            if nxt is None:
                continue
            gap = ts + ONE_HOUR
            while gap < nxt[0]:
                records.append(ViewershipRecord(gap, channel, "", np.zeros(N_CELLS, np.int64), missing=True))
                gap += ONE_HOUR
        out[channel] = ViewershipSeries(channel, tuple(records))
    return out


def load_viewership(path, channel_id: str | None = None) -> ViewershipSeries:
    """Read one channel's series from a viewership CSV."""
    channels = load_viewership_channels(path)
    if channel_id is None:
        if len(channels) != 1:
            raise DataError(f"{path}: file holds {len(channels)} channels; pick one with channel_id")
        return next(iter(channels.values()))
    try:
        return channels[channel_id]
    except KeyError:
        raise DataError(f"{path}: channel {channel_id!r} not present") from None


def write_viewership(path, series: ViewershipSeries | Iterable[ViewershipSeries]) -> None:
    """Write series to CSV; missing records are omitted (absent rows mean missing)."""
    if isinstance(series, ViewershipSeries):
        series = [series]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(VIEWERSHIP_HEADER)
        for s in series:
            for r in s.records:
                if r.missing:
                    continue
                w.writerow([format_hour(r.timestamp), r.channel_id, r.program_id, *map(int, r.impressions)])


def write_panel(path, panel: Panel) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PANEL_HEADER)
        for slot_id, viewers in panel.audiences.items():
            for v in viewers:
                w.writerow([slot_id, int(v)])


def load_panel(path) -> Panel:
    path = Path(path)
    events = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != PANEL_HEADER:
            raise DataError(f"{path}:1: header must be slot_id,viewer_id")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 or ":" not in row[0]:
                raise DataError(f"{path}:{lineno}: malformed panel row")
            try:
                events.append((row[0].strip(), int(row[1])))
            except ValueError:
                raise DataError(f"{path}:{lineno}: viewer_id must be an integer") from None
    return make_panel(events)


def load_orders(path) -> list[Order]:
    """Orders from a JSON array, or from an object with the array under ``orders``."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    if isinstance(raw, dict):
        extra = set(raw) - {"orders", "meta"}
        if "orders" not in raw or extra:
            raise DataError(f"{path}: an orders object holds only 'orders' and 'meta'")
        raw = raw["orders"]
    if not isinstance(raw, list):
        raise DataError(f"{path}: expected a JSON array of orders")
    allowed = {"order_id", "budget", "target_impressions", "demographics", "reach_target", "forbid_consecutive"}
    orders = []
    seen = set()
    for k, item in enumerate(raw):
        if not isinstance(item, dict):
            raise DataError(f"{path}: order #{k} is not an object")
        unknown = set(item) - allowed
        if unknown:
            raise DataError(f"{path}: order #{k}: unknown keys {sorted(unknown)}")
        try:
            oid = str(item["order_id"])
            order = Order(
                order_id=oid,
                budget=float(item["budget"]),
                target_impressions=float(item["target_impressions"]),
                demographics=frozenset(item["demographics"]),
                reach_target=None if item.get("reach_target") is None else float(item["reach_target"]),
                forbid_consecutive=bool(item.get("forbid_consecutive", False)),
            )
        except KeyError as exc:
            raise DataError(f"{path}: order #{k}: missing key {exc}") from None
        except (TypeError, ValueError) as exc:
            raise DataError(f"{path}: order #{k}: {exc}") from None
        if oid in seen:
            raise DataError(f"{path}: duplicate order_id {oid}")
        seen.add(oid)
        orders.append(order)
    return orders


def order_records(orders: Iterable[Order]) -> list[dict]:
    """Orders as plain JSON-ready dicts, in the layout ``load_orders`` reads."""
    items = []
    for o in orders:
        item = {
            "order_id": o.order_id,
            "budget": o.budget,
            "target_impressions": o.target_impressions,
            "demographics": sorted(c.code for c in o.demographics),
        }
        if o.reach_target is not None:
            item["reach_target"] = o.reach_target
        if o.forbid_consecutive:
            item["forbid_consecutive"] = True
        items.append(item)
    return items


def write_orders(path, orders: Iterable[Order], meta: dict | None = None) -> None:
    items = order_records(orders)
    payload = items if meta is None else {"meta": meta, "orders": items}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_catalog(path) -> SlotCatalog:
    path = Path(path)
    slots = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != CATALOG_HEADER:
            raise DataError(f"{path}:1: header must be {','.join(CATALOG_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                slots.append(Slot(row[0].strip(), int(row[1]), parse_hour(row[2]), float(row[3])))
            except (IndexError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    try:
        return SlotCatalog(tuple(slots))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_catalog(path, catalog: SlotCatalog) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CATALOG_HEADER)
        for s in catalog.slots:
            w.writerow([s.channel_id, s.slot_index, format_hour(s.timestamp), repr(float(s.price))])
