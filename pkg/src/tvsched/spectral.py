"""Fourier signal/noise decomposition, noise distribution fits and spike statistics.

Coefficients are scaled so that

    S(t) = A_0 + sum_j (A_j exp(2 pi i j t / n) + conj(A_j) exp(-2 pi i j t / n))

holds exactly, i.e. ``A_j`` is the raw transform divided by ``n``. Mode ``j`` has
frequency ``24 j / n`` cycles per day for an hourly series.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

HOURS_PER_DAY = 24.0
NU_MAX = 1e10


class SpectralError(ValueError):
    pass


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class Spectrum:
    coefficients: np.ndarray  # full length-n array, conj-symmetric for real input

    @property
    def span_hours(self) -> int:
        return len(self.coefficients)

    @property
    def n_modes(self) -> int:
        """Number of modes with index 1..n//2 (the Nyquist mode counts once)."""
        return self.span_hours // 2

    @property
    def mean(self) -> float:
        return float(self.coefficients[0].real)

    def amplitudes(self) -> np.ndarray:
        """|A_j| for j = 0..n//2."""
        return np.abs(self.coefficients[: self.n_modes + 1])

    def frequencies_per_day(self) -> np.ndarray:
        return HOURS_PER_DAY * np.arange(self.n_modes + 1) / self.span_hours

    def energy(self) -> float:
        """n * sum_k |c_k|^2, which equals sum_t S(t)^2 under this scaling."""
        return float(self.span_hours * np.sum(np.abs(self.coefficients) ** 2))


@dataclass(frozen=True)
class FilterResult:
    signal: np.ndarray
    noise: np.ndarray
    threshold: float
    kept_mode_count: int


def _as_series(series) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise SpectralError("series must be one-dimensional with at least 2 points")
    if not np.isfinite(x).all():
        raise SpectralError("series contains missing values; interpolate first")
    return x


def direct_dft(x: np.ndarray, chunk: int = 256) -> np.ndarray:
    """O(n^2) transform sum_t x_t exp(-2 pi i k t / n), one output frequency at a time per row."""
    n = x.size
    t = np.arange(n)
    out = np.empty(n, dtype=complex)
    for k0 in range(0, n, chunk):
        k = np.arange(k0, min(n, k0 + chunk))
        # Reduce k*t mod n in integers so the phase stays accurate for long series.
        phase = (np.outer(k, t) % n) * (-2j * np.pi / n)
        out[k] = np.exp(phase) @ x
    return out


def dft(series, method: str = "fft") -> Spectrum:
    """Spectrum of a real series; ``method`` is ``"fft"`` or ``"direct"``."""
    x = _as_series(series)
    if method == "fft":
        raw = np.fft.fft(x)
    elif method == "direct":
        raw = direct_dft(x)
    else:
        raise ValueError(f"unknown transform method {method!r}")
    return Spectrum(raw / x.size)


def reconstruct(spectrum: Spectrum) -> np.ndarray:
    return np.fft.ifft(spectrum.coefficients * spectrum.span_hours).real


def _mode_mask(n: int, keep_modes: np.ndarray) -> np.ndarray:
    """Full-length mask for a boolean over modes 0..n//2, mirrored onto negative frequencies."""
    full = np.zeros(n, dtype=bool)
    full[: keep_modes.size] = keep_modes
    j = np.flatnonzero(keep_modes[1:]) + 1
    full[(n - j) % n] = True
    return full


def filter_by_threshold(spectrum: Spectrum, a_thresh: float) -> FilterResult:
    """Split into signal (A_0 plus modes with |A_j| > a_thresh) and noise (the rest)."""
    if a_thresh < 0:
        raise ValueError("threshold must be non-negative")
    amps = spectrum.amplitudes()
    keep = amps > a_thresh
    keep[0] = True
    n = spectrum.span_hours
    mask = _mode_mask(n, keep)
    c = spectrum.coefficients * n
    signal = np.fft.ifft(np.where(mask, c, 0)).real
    noise = np.fft.ifft(np.where(mask, 0, c)).real
    return FilterResult(signal, noise, float(a_thresh), int(keep[1:].sum()))


def percentile_threshold(spectrum: Spectrum, percentile: float) -> float:
    """Absolute threshold at the given percentile of the non-zero-mode amplitudes."""
    return float(np.percentile(spectrum.amplitudes()[1:], percentile))


def power_spectrum(spectrum: Spectrum) -> list[tuple[float, float]]:
    """(frequency in 1/day, |A_j|) for j = 0..n//2, ascending in frequency."""
    return list(zip(spectrum.frequencies_per_day().tolist(), spectrum.amplitudes().tolist()))


def dominant_frequencies(spectrum: Spectrum, count: int) -> np.ndarray:
    """Frequencies (1/day) of the ``count`` largest non-zero modes, strongest first."""
    amps = spectrum.amplitudes()[1:]
    order = np.argsort(-amps, kind="stable")[:count]
    return spectrum.frequencies_per_day()[1:][order]


def weekly_profile(series, start_hour_of_week: int = 0) -> np.ndarray:
    """Median and 5th/95th percentiles for each of the 168 hours of the week.

    Returns an array of shape (168, 3): median, p5, p95.
    """
    x = np.asarray(series, dtype=float)
    how = (start_hour_of_week + np.arange(x.size)) % 168
    out = np.full((168, 3), np.nan)
    for h in range(168):
        vals = x[how == h]
        vals = vals[np.isfinite(vals)]
        if vals.size:
            out[h] = np.percentile(vals, [50, 5, 95])
    return out


# -- noise distribution fits -------------------------------------------------

@dataclass(frozen=True)
class NormalFit:
    mu: float
    sigma: float
    log_likelihood: float

    @property
    def degenerate(self) -> bool:
        return self.sigma == 0.0


@dataclass(frozen=True)
class TLSFit:
    mu: float
    sigma: float
    nu: float
    log_likelihood: float
    iterations: int


@dataclass(frozen=True)
class NoiseFit:
    normal: NormalFit
    tls: TLSFit

    @property
    def log_likelihoods(self) -> dict:
        return {"normal": self.normal.log_likelihood, "tls": self.tls.log_likelihood}


def normal_loglik(x: np.ndarray, mu: float, sigma: float) -> float:
    if sigma <= 0:
        return float("inf") if np.all(x == mu) else float("-inf")
    z = (x - mu) / sigma
    return float(-0.5 * np.sum(z * z) - x.size * (np.log(sigma) + 0.5 * np.log(2 * np.pi)))


def fit_noise_normal(samples) -> NormalFit:
    """Maximum-likelihood normal fit (population standard deviation)."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("need at least 2 samples")
    mu = float(x.mean())
    sigma = float(x.std())
    return NormalFit(mu, sigma, normal_loglik(x, mu, sigma))


def _lgamma_half_ratio(nu):
    """log Gamma((nu+1)/2) - log Gamma(nu/2), stable for very large nu."""
    nu = np.asarray(nu, dtype=float)
    x = nu / 2
    big = x > 1e5
    xs = np.where(big, 1.0, x)
    exact = special.gammaln(xs + 0.5) - special.gammaln(xs)
    xb = np.where(big, x, 1.0)
    asym = 0.5 * np.log(xb) - 1 / (8 * xb) + 1 / (192 * xb**3)
    return np.where(big, asym, exact)


def tls_logpdf(x, mu: float, sigma: float, nu: float) -> np.ndarray:
    """Log density of the t location-scale distribution."""
    z = (np.asarray(x, dtype=float) - mu) / sigma
    const = _lgamma_half_ratio(nu) - 0.5 * np.log(nu * np.pi) - np.log(sigma)
    return const - 0.5 * (nu + 1) * np.log1p(z * z / nu)


def tls_pdf(x, mu: float, sigma: float, nu: float) -> np.ndarray:
    return np.exp(tls_logpdf(x, mu, sigma, nu))


def _tls_start_points(x: np.ndarray) -> list[tuple[float, float, float]]:
    med = float(np.median(x))
    mad = float(np.median(np.abs(x - med))) * 1.4826
    sd = float(x.std())
    m2 = np.mean((x - x.mean()) ** 2)
    kurt = np.mean((x - x.mean()) ** 4) / m2**2 - 3 if m2 > 0 else 0.0
    nu_mom = 4 + 6 / kurt if kurt > 0 else 30.0
    scale_mom = sd * np.sqrt(max(nu_mom - 2, 0.5) / nu_mom)
    starts = [
        (med, max(mad, 1e-12), 3.0),
        (float(x.mean()), max(scale_mom, 1e-12), float(np.clip(nu_mom, 1.5, 1e3))),
        (float(x.mean()), max(sd, 1e-12), 30.0),
    ]
    return starts


def fit_noise_tls(samples, max_iter: int = 4000, tol: float = 1e-8) -> TLSFit:
    """Numerical MLE of (mu, sigma, nu) by Nelder-Mead on (mu, log sigma, log(nu - 1)).

    Three restarts from moment-based guesses; the normal fit evaluated at
    ``nu = NU_MAX`` is also a candidate, so the result never falls below the
    normal limit of the family.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 10:
        raise ValueError("need at least 10 samples")
    if not np.isfinite(x).all():
        raise ValueError("samples must be finite")
    sd = float(x.std())
    if sd == 0:
        raise FitError("samples are constant; t location-scale fit undefined")
    log_nu_cap = np.log(NU_MAX - 1)

    def unpack(theta):
        mu, ls, lnu = theta
        return mu, sd * np.exp(ls), 1.0 + np.exp(min(lnu, log_nu_cap))

    def nll(theta):
        mu, s, nu = unpack(theta)
        if not np.isfinite(s) or s <= 0:
            return np.inf
        return -float(np.sum(tls_logpdf(x, mu, s, nu)))

    best = None
    converged = False
    total_iter = 0
    for mu0, s0, nu0 in _tls_start_points(x):
        theta0 = np.array([mu0, np.log(s0 / sd), np.log(nu0 - 1)])
        res = optimize.minimize(
            nll, theta0, method="Nelder-Mead",
            options={"maxiter": max_iter, "xatol": 1e-8, "fatol": tol, "adaptive": True},
        )
        total_iter += int(res.nit)
        converged |= bool(res.success)
        if best is None or res.fun < best.fun:
            best = res
    if not converged:
        raise FitError(f"t location-scale fit did not converge within {max_iter} iterations per restart")

    mu, s, nu = unpack(best.x)
    ll = -float(best.fun)
    nfit = fit_noise_normal(x)
    ll_limit = float(np.sum(tls_logpdf(x, nfit.mu, nfit.sigma, NU_MAX)))
    if ll_limit > ll:
        mu, s, nu, ll = nfit.mu, nfit.sigma, NU_MAX, ll_limit
    return TLSFit(float(mu), float(s), float(nu), ll, total_iter)


def fit_noise(samples) -> NoiseFit:
    return NoiseFit(fit_noise_normal(samples), fit_noise_tls(samples))


# -- spikes ------------------------------------------------------------------

@dataclass(frozen=True)
class SpikeAnalysis:
    threshold_value: float
    spike_times: np.ndarray
    waiting_times: np.ndarray
    lambda_hat: float | None


def detect_spikes(series, percentile: float = 95.0, threshold: float | None = None) -> SpikeAnalysis:
    """Spikes are upward crossings of a percentile threshold.

    Index ``t`` is a spike when ``x[t] > thr`` and ``x[t-1] <= thr``; index 0
    counts if it starts above the threshold.
    """
    x = np.asarray(series, dtype=float)
    if x.size == 0 or np.all(x == x[0]):
        raise SpectralError("series must be non-constant")
    thr = float(np.percentile(x, percentile)) if threshold is None else float(threshold)
    above = x > thr
    starts = above.copy()
    starts[1:] &= ~above[:-1]
    times = np.flatnonzero(starts)
    waits = np.diff(times)
    lam = float(1.0 / waits.mean()) if waits.size else None
    return SpikeAnalysis(thr, times, waits, lam)


def fit_exponential(waiting_times) -> float:
    """Maximum-likelihood exponential rate, 1 / mean."""
    w = np.asarray(waiting_times, dtype=float)
    if w.size < 2:
        raise ValueError("need at least 2 waiting times")
    if (w <= 0).any():
        raise ValueError("waiting times must be positive")
    return float(1.0 / w.mean())


def ks_statistic_exponential(samples, rate: float) -> float:
    """Kolmogorov-Smirnov distance between the sample and Exp(rate)."""
    w = np.sort(np.asarray(samples, dtype=float))
    n = w.size
    cdf = 1.0 - np.exp(-rate * w)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(n) / n
    return float(max(upper.max(), lower.max()))
