"""Campaign reach and frequency.

Exact reach counts distinct panel viewers across a campaign's airings. The
approximate path needs only per-airing impressions S and two-slot overlaps
P[i, i'] (share of slot i' viewers who also watched slot i). Assuming each
viewer of an airing watched every earlier airing independently, the new
audience of airing j is

    S#_j = S_j * prod_{j' < j} (1 - P[j', j])

and reach R = sum_j S#_j. Uncertainty in S and P is carried to R and to the
frequency F = I / R with a first-order (small noise) expansion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .viewdata.model import Panel


class ReachError(ValueError):
    pass


def parse_slot_id(slot_id: str) -> tuple[str, int]:
    channel, _, index = slot_id.rpartition(":")
    if not channel or not index.isdigit():
        raise ReachError(f"bad slot id {slot_id!r}; expected channel:index")
    return channel, int(index)


@dataclass(frozen=True)
class CampaignAirings:
    """Airings of one commercial on one channel, in slot order."""

    channel_id: str
    slot_index: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.slot_index)
        object.__setattr__(self, "slot_index", idx)
        if not idx:
            raise ReachError("a campaign needs at least one airing")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ReachError("airing slot indices must be strictly increasing")

    @classmethod
    def from_slot_ids(cls, slot_ids: Sequence[str]) -> "CampaignAirings":
        parsed = [parse_slot_id(s) for s in slot_ids]
        channels = {c for c, _ in parsed}
        if len(channels) != 1:
            raise ReachError("airings must share one channel; split by channel first")
        return cls(parsed[0][0], tuple(sorted(i for _, i in parsed)))

    @property
    def slot_ids(self) -> list[str]:
        return [f"{self.channel_id}:{i}" for i in self.slot_index]

    def __len__(self) -> int:
        return len(self.slot_index)


def split_by_channel(slot_ids: Sequence[str]) -> list[CampaignAirings]:
    groups: dict[str, list[int]] = {}
    for s in slot_ids:
        c, i = parse_slot_id(s)
        groups.setdefault(c, []).append(i)
    return [CampaignAirings(c, tuple(sorted(v))) for c, v in sorted(groups.items())]


@dataclass(frozen=True)
class TwoSlotOverlap:
    """Overlaps among slots of one channel.

    ``matrix[a, b]`` for a < b holds P between ``slot_index[a]`` (earlier) and
    ``slot_index[b]``; NaN marks an absent entry (and the lower triangle).
    ``audience[b]`` is the panel audience size behind column b. ``lag[d]``,
    when present, is the stationary overlap at slot distance d.
    """

    channel_id: str
    slot_index: np.ndarray
    matrix: np.ndarray
    audience: np.ndarray
    lag: np.ndarray | None = None

    def __post_init__(self):
        idx = np.asarray(self.slot_index, dtype=np.int64)
        M = np.asarray(self.matrix, dtype=float)
        if M.shape != (idx.size, idx.size):
            raise ReachError("overlap matrix does not match the slot list")
        if np.any(np.diff(idx) <= 0):
            raise ReachError("overlap slots must be strictly increasing")
        finite = M[np.isfinite(M)]
        if ((finite < 0) | (finite > 1)).any():
            raise ReachError("overlap entries must lie in [0, 1]")
        object.__setattr__(self, "slot_index", idx)
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "audience", np.asarray(self.audience, dtype=float))
        if self.lag is not None:
            object.__setattr__(self, "lag", np.asarray(self.lag, dtype=float))

    def with_lag(self, lag: np.ndarray | None) -> "TwoSlotOverlap":
        return TwoSlotOverlap(self.channel_id, self.slot_index, self.matrix, self.audience, lag)

    def _pos(self, i: int) -> int | None:
        k = int(np.searchsorted(self.slot_index, i))
        return k if k < self.slot_index.size and self.slot_index[k] == i else None

    def value(self, i: int, j: int, stationary: bool = False) -> float:
        """P between slot ``i`` and a later slot ``j``, falling back to the lag vector."""
        if j <= i:
            raise ReachError("overlap needs an earlier and a later slot")
        if not stationary:
            a, b = self._pos(i), self._pos(j)
            if a is not None and b is not None and np.isfinite(self.matrix[a, b]):
                return float(self.matrix[a, b])
        d = j - i
        if self.lag is not None and d < self.lag.size and np.isfinite(self.lag[d]):
            return float(self.lag[d])
        raise ReachError(f"no overlap estimate for slots {self.channel_id}:{i} and {self.channel_id}:{j}")

    def audience_of(self, j: int) -> float:
        b = self._pos(j)
        return float(self.audience[b]) if b is not None else np.nan

    def airing_matrix(self, airings: CampaignAirings, stationary: bool = False) -> np.ndarray:
        """Dense (N, N) overlap matrix over the airings; zeros on and below the diagonal."""
        idx = airings.slot_index
        M = np.zeros((len(idx), len(idx)))
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                M[a, b] = self.value(idx[a], idx[b], stationary)
        return M


def estimate_overlap_from_panel(panel: Panel, slot_ids: Sequence[str]) -> TwoSlotOverlap:
    """Empirical overlaps among the listed slots (one channel) from viewer sets."""
    airings = CampaignAirings.from_slot_ids(slot_ids)
    ids = airings.slot_ids
    audiences = [panel.audience(s) for s in ids]
    sizes = np.array([a.size for a in audiences], dtype=float)
    k = len(ids)
    M = np.full((k, k), np.nan)
    if k:
        viewers = np.unique(np.concatenate(audiences)) if any(sizes) else np.empty(0, np.int64)
        member = np.zeros((viewers.size, k), dtype=np.float64)
        for b, a in enumerate(audiences):
            member[np.searchsorted(viewers, a), b] = 1.0
        both = member.T @ member
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = both / sizes[None, :]
        upper = np.triu(np.ones((k, k), bool), 1)
        ok = upper & (sizes[:, None] > 0) & (sizes[None, :] > 0)
        M[ok] = ratio[ok]
    return TwoSlotOverlap(airings.channel_id, np.array(airings.slot_index), M, sizes)


def compress_stationary(overlap: TwoSlotOverlap) -> np.ndarray:
    """g(d): mean overlap over pairs d slots apart; NaN where no pair exists."""
    idx = overlap.slot_index
    if idx.size == 0:
        raise ReachError("overlap matrix is empty")
    span = int(idx[-1] - idx[0]) if idx.size else 0
    total = np.zeros(span + 1)
    count = np.zeros(span + 1)
    a, b = np.triu_indices(idx.size, 1)
    vals = overlap.matrix[a, b]
    ok = np.isfinite(vals)
    d = (idx[b] - idx[a])[ok]
    np.add.at(total, d, vals[ok])
    np.add.at(count, d, 1)
    with np.errstate(invalid="ignore"):
        g = total / count
    g[0] = np.nan
    return g


def expand_stationary(lag: np.ndarray, slot_index: Sequence[int]) -> np.ndarray:
    """Overlap matrix with entry (a, b) = g(slot_index[b] - slot_index[a]) above the diagonal."""
    idx = np.asarray(slot_index, dtype=np.int64)
    M = np.full((idx.size, idx.size), np.nan)
    a, b = np.triu_indices(idx.size, 1)
    d = idx[b] - idx[a]
    inside = d < lag.size
    M[a[inside], b[inside]] = lag[d[inside]]
    return M


@dataclass(frozen=True)
class ReachEstimate:
    new_impressions: np.ndarray
    impressions: float
    reach: float
    frequency: float | None
    sigma_R: float | None = None
    sigma_F: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "new_impressions", np.asarray(self.new_impressions, dtype=float))


def _frequency(I: float, R: float) -> float | None:
    return I / R if R > 0 else None


def exact_reach_from_panel(panel: Panel, airings: CampaignAirings) -> ReachEstimate:
    seen = np.empty(0, dtype=np.int64)
    new, total = [], 0
    for sid in airings.slot_ids:
        if sid not in panel.audiences:
            raise ReachError(f"slot {sid} is not in the panel")
        aud = panel.audience(sid)
        fresh = np.setdiff1d(aud, seen, assume_unique=True)
        new.append(fresh.size)
        total += aud.size
        seen = np.union1d(seen, aud)
    R = float(sum(new))
    return ReachEstimate(np.array(new, float), float(total), R, _frequency(float(total), R))


def new_impressions(S, P: np.ndarray) -> np.ndarray:
    """S#_j = S_j prod_{j'<j} (1 - P[j', j]) for a dense upper-triangular P."""
    S = np.asarray(S, dtype=float)
    P = np.asarray(P, dtype=float)
    keep = np.triu(1.0 - P, 1) + np.tril(np.ones_like(P))
    return S * np.prod(keep, axis=0)


def estimate_new_impressions(S, overlap: TwoSlotOverlap, airings: CampaignAirings,
                             stationary: bool = False) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.shape != (len(airings),):
        raise ReachError("need one impression value per airing")
    return new_impressions(S, overlap.airing_matrix(airings, stationary))


def reach_polynomial(X, S, P) -> float:
    """R(X) = sum_i X_i S_i prod_{i'<i} (1 - P[i', i] X_i') over chronologically ordered slots."""
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    P = np.asarray(P, dtype=float)
    if not (X.shape == S.shape and P.shape == (S.size, S.size)):
        raise ReachError("X, S and P dimensions disagree")
    factors = np.triu(1.0 - P * X[:, None], 1) + np.tril(np.ones_like(P))
    return float(np.sum(X * S * np.prod(factors, axis=0)))


@dataclass(frozen=True)
class UncertainInputs:
    """Means and standard deviations of S per airing and P per airing pair."""

    S_mean: np.ndarray
    S_sigma: np.ndarray
    P_mean: np.ndarray
    P_sigma: np.ndarray

    def __post_init__(self):
        Sm, Ss = (np.asarray(v, dtype=float) for v in (self.S_mean, self.S_sigma))
        Pm, Ps = (np.asarray(v, dtype=float) for v in (self.P_mean, self.P_sigma))
        n = Sm.size
        if Ss.shape != (n,) or Pm.shape != (n, n) or Ps.shape != (n, n):
            raise ReachError("uncertain inputs have inconsistent shapes")
        if (Ss < 0).any() or (Ps < 0).any():
            raise ReachError("standard deviations must be non-negative")
        upper = np.triu(np.ones((n, n), bool), 1)
        if ((Pm[upper] < 0) | (Pm[upper] > 1)).any():
            raise ReachError("mean overlaps must lie in [0, 1]")
        # only the strict upper triangle carries meaning
        Pm = np.where(upper, Pm, 0.0)
        Ps = np.where(upper, Ps, 0.0)
        for name, v in (("S_mean", Sm), ("S_sigma", Ss), ("P_mean", Pm), ("P_sigma", Ps)):
            object.__setattr__(self, name, v)

    def __len__(self) -> int:
        return self.S_mean.size


def binomial_overlap_sigma(overlap: TwoSlotOverlap, airings: CampaignAirings,
                           stationary: bool = False) -> np.ndarray:
    """sqrt(P (1 - P) / n) with n the later slot's panel audience."""
    P = overlap.airing_matrix(airings, stationary)
    n = np.array([overlap.audience_of(j) for j in airings.slot_index])
    n = np.where(np.isfinite(n) & (n > 0), n, np.inf)
    return np.triu(np.sqrt(P * (1 - P) / n[None, :]), 1)


def reach_variance(inputs: UncertainInputs) -> float:
    """First-order variance of R with independent S and P errors.

    sum_j sigma^2(S_j) prod_{j'<j} (1-P[j',j])^2
      + sum_j sum_{j''<j} S_j^2 sigma^2(P[j'',j]) prod_{j'<j, j'!=j''} (1-P[j',j])^2
    """
    Sm, Ss, Pm, Ps = inputs.S_mean, inputs.S_sigma, inputs.P_mean, inputs.P_sigma
    q2 = (np.triu(1.0 - Pm, 1) + np.tril(np.ones_like(Pm))) ** 2
    full = np.prod(q2, axis=0)
    first = np.sum(Ss ** 2 * full)
    second = 0.0
    n = Sm.size
    for j in range(1, n):
        col = q2[:j, j]
        for k in range(j):
            rest = np.prod(np.delete(col, k))
            second += Sm[j] ** 2 * Ps[k, j] ** 2 * rest
    return float(first + second)


def frequency_variance(inputs: UncertainInputs, sigma2_R: float) -> float:
    """sigma^2(S)/R^2 + sigma^2(R) S^2 / R^4 with S the total mean impressions.

    The two terms treat total impressions and reach as uncorrelated; see
    ``frequency_variance_correlated`` for the expansion that keeps their
    covariance.
    """
    S_tot = float(inputs.S_mean.sum())
    R = float(new_impressions(inputs.S_mean, inputs.P_mean).sum())
    if R <= 0:
        raise ReachError("mean reach is zero; frequency undefined")
    s2 = float(np.sum(inputs.S_sigma ** 2))
    return s2 / R ** 2 + sigma2_R * S_tot ** 2 / R ** 4


def frequency_variance_correlated(inputs: UncertainInputs) -> float:
    """First-order variance of F = I / R including the shared dependence on S."""
    Sm, Ss, Pm, Ps = inputs.S_mean, inputs.S_sigma, inputs.P_mean, inputs.P_sigma
    q = np.triu(1.0 - Pm, 1) + np.tril(np.ones_like(Pm))
    disc = np.prod(q, axis=0)
    I, R = float(Sm.sum()), float(np.sum(Sm * disc))
    if R <= 0:
        raise ReachError("mean reach is zero; frequency undefined")
    dF_dS = 1.0 / R - I * disc / R ** 2
    var = float(np.sum(dF_dS ** 2 * Ss ** 2))
    n = Sm.size
    for j in range(1, n):
        for k in range(j):
            if Ps[k, j] == 0:
                continue
            dR_dP = -Sm[j] * np.prod(np.delete(q[:j, j], k))
            var += (I / R ** 2 * dR_dP) ** 2 * Ps[k, j] ** 2
    return var


def propagate_monte_carlo(inputs: UncertainInputs, draws: int, seed: int,
                          chunk: int = 100_000) -> tuple[float, float]:
    """Sample variances of (R, F) under independent Gaussian perturbations of S and P."""
    rng = np.random.default_rng(seed)
    n = len(inputs)
    iu = np.triu_indices(n, 1)
    Rs, Fs = [], []
    done = 0
    while done < draws:
        k = min(chunk, draws - done)
        S = inputs.S_mean + inputs.S_sigma * rng.standard_normal((k, n))
        P = np.zeros((k, n, n))
        P[:, iu[0], iu[1]] = inputs.P_mean[iu] + inputs.P_sigma[iu] * rng.standard_normal((k, len(iu[0])))
        q = 1.0 - P
        q[:, np.tril_indices(n)[0], np.tril_indices(n)[1]] = 1.0
        R = np.sum(S * np.prod(q, axis=1), axis=1)
        Rs.append(R)
        Fs.append(S.sum(axis=1) / R)
        done += k
    R = np.concatenate(Rs)
    F = np.concatenate(Fs)
    return float(R.var(ddof=1)), float(F.var(ddof=1))


@dataclass(frozen=True)
class OrderReach:
    order_id: str
    estimate: ReachEstimate
    exact: ReachEstimate | None
    reach_target: float | None
    target_met_mean: bool | None
    target_met_2sigma: bool | None


def campaign_estimate(S, overlap: TwoSlotOverlap, airings: CampaignAirings,
                      S_sigma=None, P_sigma=None, stationary: bool = False) -> ReachEstimate:
    S = np.asarray(S, dtype=float)
    P = overlap.airing_matrix(airings, stationary)
    new = new_impressions(S, P)
    I, R = float(S.sum()), float(new.sum())
    inputs = UncertainInputs(
        S, np.zeros_like(S) if S_sigma is None else np.asarray(S_sigma, float),
        P, binomial_overlap_sigma(overlap, airings, stationary) if P_sigma is None else np.asarray(P_sigma, float),
    )
    var_R = reach_variance(inputs)
    var_F = frequency_variance(inputs, var_R) if R > 0 else None
    return ReachEstimate(new, I, R, _frequency(I, R), float(np.sqrt(var_R)),
                         None if var_F is None else float(np.sqrt(var_F)))


def evaluate_schedule_reach(order_id: str, slot_ids: Sequence[str], S: dict[str, float],
                            overlaps: dict[str, TwoSlotOverlap], reach_target: float | None = None,
                            S_sigma: dict[str, float] | None = None, panel: Panel | None = None,
                            stationary: bool = False) -> OrderReach:
    """Reach of one order's airings, summed over channels (no cross-channel overlap)."""
    new_all, I, R, var_R, var_S = [], 0.0, 0.0, 0.0, 0.0
    exact_new, exact_I, exact_R = [], 0.0, 0.0
    for airings in split_by_channel(slot_ids):
        ids = airings.slot_ids
        s = np.array([S[k] for k in ids], dtype=float)
        sig = np.array([0.0 if S_sigma is None else S_sigma[k] for k in ids])
        ov = overlaps[airings.channel_id]
        P = ov.airing_matrix(airings, stationary)
        inputs = UncertainInputs(s, sig, P, binomial_overlap_sigma(ov, airings, stationary))
        new = new_impressions(s, P)
        new_all.extend(new)
        I += float(s.sum())
        R += float(new.sum())
        var_R += reach_variance(inputs)
        var_S += float(np.sum(sig ** 2))
        if panel is not None:
            ex = exact_reach_from_panel(panel, airings)
            exact_new.extend(ex.new_impressions)
            exact_I += ex.impressions
            exact_R += ex.reach
    sigma_F = None
    if R > 0:
        sigma_F = float(np.sqrt(var_S / R ** 2 + var_R * I ** 2 / R ** 4))
    est = ReachEstimate(np.array(new_all), I, R, _frequency(I, R), float(np.sqrt(var_R)), sigma_F)
    exact = None
    if panel is not None:
        exact = ReachEstimate(np.array(exact_new), exact_I, exact_R, _frequency(exact_I, exact_R))
    met_mean = met_2s = None
    if reach_target is not None:
        met_mean = bool(R >= reach_target)
        met_2s = bool(R - 2 * est.sigma_R >= reach_target)
    return OrderReach(order_id, est, exact, reach_target, met_mean, met_2s)
