"""Panel-based synthetic viewership with periodic structure, heavy-tailed noise and spikes.

Each viewer has a fixed demographic cell. In hour ``t`` every viewer watches
independently with probability

    p(t) = base + sum_k a_k cos(2 pi f_k t / 24 + phi_k) + noise(t) + spike(t)

optionally scaled by a per-program, per-cell affinity that averages to one.
Noise is t location-scale; spikes start at exponentially distributed
inter-arrival times and hold a fixed bump for a few hours.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from datetime import datetime

import numpy as np

from .model import N_CELLS, ONE_HOUR, DataError, Panel, ViewershipRecord, ViewershipSeries

# Weekly harmonics 1/7..6/7, then daily and twice daily.
DEFAULT_FREQUENCIES = tuple(k / 7 for k in range(1, 7)) + (1.0, 2.0)


class GeneratorError(DataError):
    pass


@dataclass(frozen=True)
class Harmonic:
    freq_per_day: float
    amplitude: float
    phase: float = 0.0


@dataclass(frozen=True)
class GeneratorConfig:
    span_hours: int = 6551
    viewer_count: int = 10_000
    base_probability: float = 0.1
    harmonics: tuple = ()
    noise_mu: float = 0.0
    noise_sigma: float = 0.0
    noise_nu: float = 3.0
    spike_rate: float = 0.0
    spike_magnitude: float = 0.0
    spike_duration: int = 2
    cell_weights: tuple | None = None
    n_programs: int = 1
    program_hours: int = 1
    program_affinity_spread: float = 0.0
    clip: bool = False
    channel_id: str = "7287"
    start: str = "2014-10-23T00:00"

    def __post_init__(self):
        hs = tuple(h if isinstance(h, Harmonic) else Harmonic(**h) for h in self.harmonics)
        object.__setattr__(self, "harmonics", hs)
        if self.cell_weights is not None:
            object.__setattr__(self, "cell_weights", tuple(float(w) for w in self.cell_weights))
        if self.span_hours < 1 or self.viewer_count < 1:
            raise GeneratorError("span_hours and viewer_count must be positive")
        if self.noise_sigma < 0 or self.noise_nu <= 0:
            raise GeneratorError("noise_sigma must be >= 0 and noise_nu > 0")
        if self.spike_rate < 0 or self.spike_duration < 1:
            raise GeneratorError("spike_rate must be >= 0 and spike_duration >= 1")
        if self.cell_weights is not None:
            w = np.asarray(self.cell_weights)
            if w.shape != (N_CELLS,) or (w < 0).any() or w.sum() <= 0:
                raise GeneratorError(f"cell_weights must be {N_CELLS} non-negative numbers with positive sum")
        if self.n_programs < 1 or self.program_hours < 1:
            raise GeneratorError("n_programs and program_hours must be >= 1")
        if not 0 <= self.program_affinity_spread < 1:
            raise GeneratorError("program_affinity_spread must lie in [0, 1)")

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise GeneratorError(f"unknown generator config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["harmonics"] = [asdict(h) for h in self.harmonics]
        d["cell_weights"] = None if self.cell_weights is None else list(self.cell_weights)
        return d


@dataclass(frozen=True)
class SyntheticData:
    series: ViewershipSeries
    panel: Panel
    probability: np.ndarray        # composed per-hour viewing probability before affinity
    periodic: np.ndarray           # deterministic periodic part of the probability
    spike_onsets: np.ndarray       # hour indices where a spike starts
    program_of_hour: list = field(default_factory=list)


def periodic_probability(config: GeneratorConfig, t: np.ndarray) -> np.ndarray:
    p = np.full(t.shape, config.base_probability, dtype=float)
    for h in config.harmonics:
        p += h.amplitude * np.cos(2 * np.pi * h.freq_per_day * t / 24.0 + h.phase)
    return p


def spike_onsets(rate: float, span_hours: int, rng: np.random.Generator) -> np.ndarray:
    """Onset hours of a Poisson process with ``rate`` per hour on [0, span_hours)."""
    if rate <= 0:
        return np.empty(0, dtype=np.int64)
    times = []
    t = rng.exponential(1.0 / rate)
    while t < span_hours:
        times.append(t)
        t += rng.exponential(1.0 / rate)
    return np.floor(np.array(times)).astype(np.int64)


def simulate(config: GeneratorConfig, seed: int) -> SyntheticData:
    """Run the generator and keep the ground truth alongside the outputs."""
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(6)]
    rng_cells, rng_prog, rng_noise, rng_spike, rng_view, rng_aff = streams
    T, M = config.span_hours, config.viewer_count

    weights = np.ones(N_CELLS) if config.cell_weights is None else np.asarray(config.cell_weights)
    weights = weights / weights.sum()
    cells = rng_cells.choice(N_CELLS, size=M, p=weights)

    t = np.arange(T, dtype=float)
    periodic = periodic_probability(config, t)
    noise = np.zeros(T)
    if config.noise_sigma > 0:
        noise = config.noise_mu + config.noise_sigma * rng_noise.standard_t(config.noise_nu, size=T)
    elif config.noise_mu:
        noise = np.full(T, config.noise_mu)
    onsets = spike_onsets(config.spike_rate, T, rng_spike)
    spike = np.zeros(T)
    for s in onsets:
        spike[s : s + config.spike_duration] = config.spike_magnitude
    prob = periodic + noise + spike

    # Weekly program grid: block b of the week airs program grid[b].
    hours_per_week = 168
    n_blocks = -(-hours_per_week // config.program_hours)
    grid = rng_prog.integers(config.n_programs, size=n_blocks)
    start = datetime.fromisoformat(config.start)
    week_hour0 = start.weekday() * 24 + start.hour
    block_of_hour = ((week_hour0 + np.arange(T)) % hours_per_week) // config.program_hours
    program_idx = grid[block_of_hour]

    affinity = np.ones((config.n_programs, N_CELLS))
    if config.program_affinity_spread > 0:
        raw = 1.0 + config.program_affinity_spread * rng_aff.uniform(-1, 1, size=(config.n_programs, N_CELLS))
        affinity = raw / (raw @ weights)[:, None]

    if config.clip:
        prob = np.clip(prob, 0.0, 1.0)
    scaled_max = prob * affinity[program_idx].max(axis=1)
    bad = np.flatnonzero((prob < 0) | (prob > 1) | (scaled_max > 1))
    if bad.size:
        h = int(bad[0])
        raise GeneratorError(
            f"viewing probability {prob[h]:.6g} (max with affinity {scaled_max[h]:.6g}) "
            f"outside [0, 1] at hour {h}"
        )

    counts = np.zeros((T, N_CELLS), dtype=np.int64)
    audiences = {}
    channel = config.channel_id
    for h in range(T):
        p_viewer = prob[h] * affinity[program_idx[h], cells]
        viewers = np.flatnonzero(rng_view.random(M) < p_viewer)
        counts[h] = np.bincount(cells[viewers], minlength=N_CELLS)
        audiences[f"{channel}:{h + 1}"] = viewers.astype(np.int64)

    programs = [f"P{int(k):03d}" for k in program_idx]
    records = tuple(
        ViewershipRecord(start + h * ONE_HOUR, channel, programs[h], counts[h]) for h in range(T)
    )
    series = ViewershipSeries(channel, records)
    panel = Panel(audiences=audiences, viewer_count=M, viewer_cells=cells.astype(np.int64))
    return SyntheticData(series, panel, prob, periodic, onsets, programs)


def generate_synthetic(config: GeneratorConfig, seed: int) -> tuple[ViewershipSeries, Panel]:
    """Synthetic hourly series and the viewer panel it aggregates; deterministic in ``seed``."""
    data = simulate(config, seed)
    return data.series, data.panel


def independent_panel(slot_ids, probabilities, viewer_count: int, seed: int) -> Panel:
    """Panel where every viewer watches each slot independently with that slot's probability.

    Membership in one airing says nothing about any other, so the share of
    an airing's audience that also saw an earlier one estimates the earlier
    slot's probability and the product-discount reach model holds exactly.
    """
    q = np.asarray(probabilities, dtype=float)
    slot_ids = list(slot_ids)
    if q.shape != (len(slot_ids),) or ((q < 0) | (q > 1)).any():
        raise GeneratorError("need one probability in [0, 1] per slot")
    if viewer_count < 1:
        raise GeneratorError("viewer_count must be positive")
    rng = np.random.default_rng(seed)
    audiences = {}
    for sid, p in zip(slot_ids, q):
        audiences[sid] = np.flatnonzero(rng.random(viewer_count) < p).astype(np.int64)
    return Panel(audiences=audiences, viewer_count=int(viewer_count))
