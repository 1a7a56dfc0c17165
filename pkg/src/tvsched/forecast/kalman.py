"""Recursive Bayesian (scalar Kalman) forecasting of weekly slot impressions.

Each weekly slot (channel, day of week, hour) carries a Gaussian belief over
its mean impressions. Observations are Gaussian with a fixed standard deviation,
so the posterior after one week is also the prior for the next.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .metrics import rms_relative_error

DEFAULT_BIN_COUNTS = tuple(range(2, 11))
FLOOR_FRACTION = 0.01


@dataclass(frozen=True, order=True)
class SlotKey:
    channel_id: str
    day_of_week: int
    hour_of_day: int

    def __post_init__(self):
        if not 0 <= self.day_of_week <= 6:
            raise ValueError(f"day_of_week must be 0..6, got {self.day_of_week}")
        if not 0 <= self.hour_of_day <= 23:
            raise ValueError(f"hour_of_day must be 0..23, got {self.hour_of_day}")

    @property
    def label(self) -> str:
        return f"{self.day_of_week}:{self.hour_of_day:02d}"


@dataclass(frozen=True)
class GaussianBelief:
    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(f"belief variance must be positive, got {self.variance}")

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))


@dataclass(frozen=True)
class SigmaEstimate:
    sigma: float        # value to use, floored at 1% of the history mean
    raw: float          # minimum average per-bin standard deviation
    bin_count: int      # bin count attaining the minimum
    degenerate: bool    # raw value fell below the floor


def _variance_floor(mean: float) -> float:
    return max((FLOOR_FRACTION * mean) ** 2, 1e-12)


def estimate_observation_sigma(history, bin_counts: Iterable[int] = DEFAULT_BIN_COUNTS) -> SigmaEstimate:
    """Smallest average within-bin standard deviation over several binnings.

    For each bin count the history is cut into that many contiguous bins of
    equal length (the last bin takes the remainder); per-bin population
    standard deviations are averaged. The smallest average wins.
    """
    x = np.asarray(history, dtype=float)
    counts = sorted(set(int(k) for k in bin_counts))
    if not counts or counts[0] < 1:
        raise ValueError("bin_counts must be positive integers")
    if x.size < 2 * counts[-1]:
        raise ValueError(f"history of length {x.size} too short for {counts[-1]} bins")
    best, best_k = np.inf, counts[0]
    for k in counts:
        size = x.size // k
        if size == 0:
            raise ValueError(f"empty bin with {k} bins")
        edges = [i * size for i in range(k)] + [x.size]
        avg = float(np.mean([x[a:b].std() for a, b in zip(edges, edges[1:])]))
        if avg < best:
            best, best_k = avg, k
    floor = FLOOR_FRACTION * abs(float(x.mean()))
    sigma = max(best, floor)
    if sigma <= 0:
        sigma = 1e-6
    return SigmaEstimate(float(sigma), float(best), best_k, best < floor or best == 0)


def init_prior(history) -> GaussianBelief:
    """Gaussian fit to historical slot values: sample mean, unbiased sample variance."""
    x = np.asarray(history, dtype=float)
    if x.size < 2:
        raise ValueError("need at least 2 observations for a prior")
    mean = float(x.mean())
    var = float(x.var(ddof=1))
    return GaussianBelief(mean, max(var, _variance_floor(mean)))


def kalman_update(belief: GaussianBelief, observation: float, obs_sigma: float) -> GaussianBelief:
    """Conjugate Gaussian update; the posterior doubles as next week's prior."""
    if not obs_sigma > 0:
        raise ValueError("obs_sigma must be positive")
    s2 = float(obs_sigma) ** 2
    v0 = belief.variance
    mean = (s2 * belief.mean + v0 * float(observation)) / (v0 + s2)
    var = 1.0 / (1.0 / v0 + 1.0 / s2)
    return GaussianBelief(mean, var)


@dataclass
class KalmanModel:
    obs_sigma: float
    beliefs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.obs_sigma > 0:
            raise ValueError("obs_sigma must be positive")

    def update(self, key: SlotKey, observation: float) -> GaussianBelief:
        post = kalman_update(self.beliefs[key], observation, self.obs_sigma)
        self.beliefs[key] = post
        return post


def kalman_forecast(model: KalmanModel, key: SlotKey) -> float:
    try:
        return model.beliefs[key].mean
    except KeyError:
        raise KeyError(f"no belief for slot {key}") from None


@dataclass(frozen=True)
class SlotEvaluation:
    predictions: np.ndarray
    actuals: np.ndarray
    final_belief: GaussianBelief
    obs_sigma: float

    @property
    def relative_errors(self) -> np.ndarray:
        return (self.predictions - self.actuals) / self.actuals

    @property
    def rms_relative_error(self) -> float:
        return rms_relative_error(self.predictions, self.actuals)


def evaluate_slot(weekly_values: Sequence[float], train_weeks: int = 20,
                  bin_counts: Iterable[int] = DEFAULT_BIN_COUNTS) -> SlotEvaluation:
    """Train on the first ``train_weeks`` values, then forecast-and-update through the rest.

    The prior and the observation sigma both come from the training weeks.
    Each test week is predicted by the current belief mean before its
    observation is absorbed.
    """
    x = np.asarray(weekly_values, dtype=float)
    if not 2 <= train_weeks < x.size:
        raise ValueError("need at least 2 training weeks and 1 test week")
    train, test = x[:train_weeks], x[train_weeks:]
    counts = [k for k in bin_counts if 2 * k <= train.size] or [1]
    sigma = estimate_observation_sigma(train, counts).sigma
    belief = init_prior(train)
    preds = np.empty(test.size)
    for w, y in enumerate(test):
        preds[w] = belief.mean
        belief = kalman_update(belief, y, sigma)
    return SlotEvaluation(preds, test, belief, sigma)


def fit_model(weekly: dict, train_weeks: int | None = None,
              bin_counts: Iterable[int] = DEFAULT_BIN_COUNTS) -> KalmanModel:
    """Build a model from ``{SlotKey: weekly values}``, absorbing weeks after the training split.

    The observation sigma is the median over slots of each slot's estimate.
    """
    sigmas, priors, rest = [], {}, {}
    for key, values in weekly.items():
        x = np.asarray(values, dtype=float)
        n_train = x.size if train_weeks is None else min(train_weeks, x.size)
        train = x[:n_train]
        counts = [k for k in bin_counts if 2 * k <= train.size] or [1]
        sigmas.append(estimate_observation_sigma(train, counts).sigma)
        priors[key] = init_prior(train)
        rest[key] = x[n_train:]
    model = KalmanModel(float(np.median(sigmas)), priors)
    for key, ys in rest.items():
        for y in ys:
            model.update(key, y)
    return model
