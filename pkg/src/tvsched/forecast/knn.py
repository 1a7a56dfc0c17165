"""One-nearest-neighbour regression over (program, day of week, hour).

Program and day are nominal attributes (mismatch costs 1 each); hour is
numeric and contributes |delta hour| / 24.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class Knn1Model:
    programs: np.ndarray
    days: np.ndarray
    hours: np.ndarray
    impressions: np.ndarray

    def distances(self, program_id: str, day_of_week: int, hour: int) -> np.ndarray:
        return (
            (self.programs != program_id).astype(float)
            + (self.days != day_of_week)
            + np.abs(self.hours - hour) / 24.0
        )


def knn1_train(rows: Iterable[tuple[str, int, int, float]]) -> Knn1Model:
    rows = list(rows)
    if not rows:
        raise ValueError("training set is empty")
    prog, day, hour, imp = zip(*rows)
    return Knn1Model(
        np.array(prog, dtype=object),
        np.array(day, dtype=int),
        np.array(hour, dtype=float),
        np.array(imp, dtype=float),
    )


def knn1_predict(model: Knn1Model, query: tuple[str, int, int]) -> float:
    """Impressions of the nearest training row; ties go to the earliest row."""
    d = model.distances(*query)
    return float(model.impressions[int(np.argmin(d))])
