"""Demographic profiles, distance scores between programs, and new-program prediction."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from ..viewdata.model import N_CELLS, ViewershipRecord


@dataclass(frozen=True)
class DemographicProfile:
    ratios: np.ndarray   # l1-normalised 30-vector
    total: float

    def __post_init__(self):
        r = np.asarray(self.ratios, dtype=float)
        if r.shape != (N_CELLS,) or (r < 0).any():
            raise ValueError("ratios must be a non-negative 30-vector")
        if abs(r.sum() - 1.0) > 1e-9:
            raise ValueError("ratios must sum to 1")
        if not self.total > 0:
            raise ValueError("profile total must be positive")
        object.__setattr__(self, "ratios", r)


def profile_from_counts(counts) -> DemographicProfile:
    c = np.asarray(counts, dtype=float)
    total = float(c.sum())
    if total <= 0:
        raise ValueError("cannot build a profile from zero impressions")
    return DemographicProfile(c / total, total)


def demographic_profile(record: ViewershipRecord) -> DemographicProfile:
    if record.missing:
        raise ValueError("record is missing")
    return profile_from_counts(record.impressions)


def distance_score(p1: DemographicProfile, p2: DemographicProfile) -> float:
    """Euclidean distance between ratio vectors; lies in [0, sqrt(2)]."""
    return float(np.linalg.norm(p1.ratios - p2.ratios))


def similarity_dot(p1: DemographicProfile, p2: DemographicProfile) -> float:
    """Cosine similarity of the ratio vectors, in [0, 1]."""
    a, b = p1.ratios, p2.ratios
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


class PairCondition(str, Enum):
    ALL_RANDOM = "all_random"
    SAME_DAY_HOUR = "same_day_hour"
    SAME_PROGRAM_SAME_HOUR = "same_program_same_hour"
    SAME_PROGRAM_SAME_DAY = "same_program_same_day"


def _condition_keys(records: Sequence[ViewershipRecord], condition: PairCondition) -> list:
    if condition is PairCondition.ALL_RANDOM:
        return [0] * len(records)
    if condition is PairCondition.SAME_DAY_HOUR:
        return [(r.day_of_week, r.hour) for r in records]
    if condition is PairCondition.SAME_PROGRAM_SAME_HOUR:
        return [(r.program_id, r.hour) for r in records]
    return [(r.program_id, r.day_of_week) for r in records]


def pairing_experiment(records: Sequence[ViewershipRecord], n_pairs: int,
                       condition: PairCondition | str, seed: int) -> float:
    """Mean distance score over random record pairs that share the condition's attributes.

    The first record is uniform over records that have at least one partner;
    the second is uniform over its partners. Sampling is with replacement and a
    record is never paired with itself.
    """
    condition = PairCondition(condition)
    recs = [r for r in records if not r.missing and r.total > 0]
    if n_pairs < 1:
        raise ValueError("n_pairs must be positive")
    keys = _condition_keys(recs, condition)
    groups: dict = {}
    for idx, k in enumerate(keys):
        groups.setdefault(k, []).append(idx)
    members = [g for g in groups.values() if len(g) >= 2]
    if not members:
        raise ValueError(f"condition {condition.value} is unsatisfiable on this data")

    order, starts, sizes, positions = [], [], [], []
    for g in members:
        starts.extend([len(order)] * len(g))
        sizes.extend([len(g)] * len(g))
        positions.extend(range(len(g)))
        order.extend(g)
    order, starts, sizes, positions = map(np.asarray, (order, starts, sizes, positions))

    ratios = np.array([r.impressions / r.total for r in recs], dtype=float)
    rng = np.random.default_rng(seed)
    first = rng.integers(order.size, size=n_pairs)
    offset = rng.integers(sizes[first] - 1)
    offset += offset >= positions[first]
    second = starts[first] + offset
    i, j = order[first], order[second]
    d = np.linalg.norm(ratios[i] - ratios[j], axis=1)
    return float(d.mean())


@dataclass(frozen=True)
class NewProgramPrediction:
    profile: DemographicProfile
    impressions: np.ndarray     # averaged per-cell counts
    programs: tuple

    @property
    def total(self) -> float:
        return float(self.impressions.sum())


def predict_new_program(target: tuple[int, int], history: Sequence[ViewershipRecord],
                        k: int) -> NewProgramPrediction:
    """Average the per-cell impressions of the ``k`` programs most typical of the target time.

    Candidates are programs that aired at the target (day of week, hour); each
    candidate's counts are averaged over its airings there. Candidates are
    ranked by distance to the pool's mean profile, ties by program id.
    """
    dow, hour = target
    per_program: dict[str, list[np.ndarray]] = {}
    for r in history:
        if r.missing or r.day_of_week != dow or r.hour != hour or r.total <= 0:
            continue
        per_program.setdefault(r.program_id, []).append(r.impressions.astype(float))
    if not per_program:
        raise ValueError(f"no historical programs at day {dow} hour {hour}")
    if not 1 <= k <= len(per_program):
        raise ValueError(f"k={k} but only {len(per_program)} candidate programs")
    names = sorted(per_program)
    counts = np.array([np.mean(per_program[p], axis=0) for p in names])
    profiles = counts / counts.sum(axis=1, keepdims=True)
    pool_mean = profiles.mean(axis=0)
    dist = np.linalg.norm(profiles - pool_mean, axis=1)
    ranked = sorted(range(len(names)), key=lambda i: (dist[i], names[i]))[:k]
    avg = counts[ranked].mean(axis=0)
    return NewProgramPrediction(profile_from_counts(avg), avg, tuple(names[i] for i in ranked))
