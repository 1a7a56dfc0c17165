from __future__ import annotations

from dataclasses import replace
from typing import Iterable

import numpy as np

from .model import DataError, DemographicCell, ViewershipRecord, ViewershipSeries, cell_mask


def interpolate_missing(series: ViewershipSeries) -> ViewershipSeries:
    """Fill missing records by per-cell linear interpolation, rounded half-up."""
    missing = series.missing_mask
    if not missing.any():
        return series
    if missing[0] or missing[-1]:
        raise DataError(f"channel {series.channel_id}: cannot interpolate a missing boundary record")
    counts = series.counts().astype(float)
    t = np.arange(len(series))
    known = ~missing
    filled = counts.copy()
    for cell in range(counts.shape[1]):
        filled[missing, cell] = np.interp(t[missing], t[known], counts[known, cell])
    filled = np.floor(filled + 0.5).astype(np.int64)
    records = tuple(
        replace(r, impressions=filled[i], missing=False) if r.missing else r
        for i, r in enumerate(series.records)
    )
    return ViewershipSeries(series.channel_id, records)


def aggregate_impressions(record: ViewershipRecord, mask) -> int:
    """Sum of the record's counts over the cells in ``mask``.

    ``mask`` may be a boolean 30-vector or an iterable of cells / cell codes.
    """
    if not isinstance(mask, np.ndarray) or mask.dtype != bool:
        mask = cell_mask(mask)
    if not mask.any():
        raise ValueError("demographic mask must be non-empty")
    return int(record.impressions[mask].sum())


def observed_records(series: Iterable[ViewershipSeries]) -> list[ViewershipRecord]:
    """Flatten non-missing records of several series into one list."""
    return [r for s in series for r in s.records if not r.missing]
