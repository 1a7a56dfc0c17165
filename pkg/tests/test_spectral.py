from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate, stats

from tvsched.spectral import (
    SpectralError,
    detect_spikes,
    dft,
    direct_dft,
    dominant_frequencies,
    filter_by_threshold,
    fit_exponential,
    fit_noise,
    fit_noise_normal,
    fit_noise_tls,
    ks_statistic_exponential,
    percentile_threshold,
    power_spectrum,
    reconstruct,
    tls_logpdf,
    tls_pdf,
    weekly_profile,
)

series_st = arrays(np.float64, st.integers(2, 300), elements=st.floats(-1e6, 1e6))


def brute_force_coefficients(x):
    n = x.size
    t = np.arange(n)
    return np.array([np.sum(x * np.exp(-2j * np.pi * k * t / n)) for k in range(n)]) / n


class TestDft:
    def test_constant(self):
        s = dft(np.full(50, 5.0))
        assert s.mean == pytest.approx(5.0)
        assert np.all(s.amplitudes()[1:] < 1e-12)

    def test_daily_cosine_against_brute_force(self):
        t = np.arange(168)
        x = 3 * np.cos(2 * np.pi * t / 24)
        s = dft(x)
        np.testing.assert_allclose(s.coefficients, brute_force_coefficients(x), atol=1e-12)
        amps = s.amplitudes()
        j = int(np.argmax(amps))
        assert amps[j] == pytest.approx(1.5)
        assert s.frequencies_per_day()[j] == pytest.approx(1.0)
        assert np.sum(amps > 1e-9) == 1

    def test_fast_matches_direct(self, rng):
        x = rng.normal(size=777)
        np.testing.assert_allclose(dft(x).coefficients, direct_dft(x) / x.size, atol=1e-12)
        np.testing.assert_allclose(dft(x, method="direct").coefficients, dft(x).coefficients, atol=1e-12)

    def test_reconstruct_random(self, rng):
        x = rng.normal(100, 30, 1000)
        assert np.max(np.abs(reconstruct(dft(x)) - x)) < 1e-9 * np.max(np.abs(x))

    def test_conjugate_symmetry(self, rng):
        c = dft(rng.normal(size=101)).coefficients
        np.testing.assert_allclose(c[1:], np.conj(c[1:][::-1]), atol=1e-12)

    def test_rejects_missing(self):
        with pytest.raises(SpectralError):
            dft([1.0, np.nan, 3.0])

    @given(series_st)
    def test_parseval(self, x):
        s = dft(x)
        ref = np.sum(x ** 2)
        assert s.energy() == pytest.approx(ref, rel=1e-9, abs=1e-9 * max(1.0, np.max(np.abs(x)) ** 2))


class TestFilter:
    def test_zero_threshold_keeps_everything(self, rng):
        x = rng.normal(size=200)
        r = filter_by_threshold(dft(x), 0.0)
        assert np.max(np.abs(r.noise)) < 1e-12

    def test_two_modes(self):
        t = np.arange(240)
        big = 3.0 * np.cos(2 * np.pi * t / 24)      # |A| = 1.5
        small = 1.0 * np.cos(2 * np.pi * t / 12)    # |A| = 0.5
        r = filter_by_threshold(dft(10 + big + small), 1.0)
        np.testing.assert_allclose(r.signal, 10 + big, atol=1e-9)
        np.testing.assert_allclose(r.noise, small, atol=1e-9)
        assert r.kept_mode_count == 1

    def test_threshold_above_all(self, rng):
        x = rng.normal(5, 1, 120)
        s = dft(x)
        r = filter_by_threshold(s, s.amplitudes()[1:].max() + 1)
        np.testing.assert_allclose(r.signal, x.mean())
        np.testing.assert_allclose(r.noise, x - x.mean(), atol=1e-12)

    def test_negative_threshold(self):
        with pytest.raises(ValueError):
            filter_by_threshold(dft([1.0, 2.0]), -1.0)

    @given(series_st, st.floats(0, 1e5))
    def test_split_reconstructs(self, x, thr):
        r = filter_by_threshold(dft(x), thr)
        scale = max(1.0, np.max(np.abs(x)))
        assert np.max(np.abs(r.signal + r.noise - x)) <= 1e-9 * scale

    @given(series_st, st.floats(0, 1e5), st.floats(0, 1e5))
    def test_monotone_in_threshold(self, x, a, b):
        s = dft(x)
        lo, hi = sorted((a, b))
        assert filter_by_threshold(s, hi).kept_mode_count <= filter_by_threshold(s, lo).kept_mode_count

    def test_percentile_threshold(self, rng):
        s = dft(rng.normal(size=500))
        thr = percentile_threshold(s, 90)
        assert thr == pytest.approx(np.percentile(s.amplitudes()[1:], 90))


class TestPowerSpectrum:
    def test_daily_over_week(self):
        t = np.arange(168)
        ps = power_spectrum(dft(np.cos(2 * np.pi * t / 24)))
        freqs, mags = map(np.array, zip(*ps))
        assert np.all(np.diff(freqs) > 0)
        assert freqs[np.argmax(mags)] == pytest.approx(1.0)

    def test_constant_only_zero_mode(self):
        freqs, mags = map(np.array, zip(*power_spectrum(dft(np.full(48, 2.0)))))
        assert mags[0] == pytest.approx(2.0)
        assert np.all(mags[1:] < 1e-12)

    def test_weekly_and_twice_daily(self):
        t = np.arange(24 * 7 * 4)
        s = dft(2 * np.cos(2 * np.pi * t / 168) + np.cos(2 * np.pi * t / 12))
        np.testing.assert_allclose(sorted(dominant_frequencies(s, 2)), [1 / 7, 2.0])


class TestWeeklyProfile:
    def test_shape_and_values(self):
        x = np.tile(np.arange(168.0), 3)
        prof = weekly_profile(x)
        assert prof.shape == (168, 3)
        np.testing.assert_allclose(prof[:, 0], np.arange(168.0))

    def test_offset(self):
        x = np.arange(168.0)
        prof = weekly_profile(x, start_hour_of_week=10)
        assert prof[10, 0] == 0.0


class TestNoiseFits:
    def test_normal_symmetric_pair(self):
        f = fit_noise_normal([-1.0, 1.0])
        assert (f.mu, f.sigma) == (0.0, 1.0)

    def test_normal_degenerate(self):
        assert fit_noise_normal([3.0, 3.0, 3.0]).degenerate

    def test_normal_needs_two(self):
        with pytest.raises(ValueError):
            fit_noise_normal([1.0])

    def test_normal_recovery(self):
        x = np.random.default_rng(5).normal(-2.7, 32, 6551)
        f = fit_noise_normal(x)
        assert abs(f.mu + 2.7) < 1.2 and abs(f.sigma - 32) < 1.0

    def test_tls_density_against_scipy(self):
        x = np.linspace(-50, 50, 101)
        np.testing.assert_allclose(tls_pdf(x, -6.2, 20, 3), stats.t.pdf(x, 3, loc=-6.2, scale=20),
                                   rtol=1e-12)
        np.testing.assert_allclose(tls_logpdf(x, 1, 2, 50), stats.t.logpdf(x, 50, loc=1, scale=2),
                                   rtol=1e-12)

    def test_tls_recovery(self):
        x = stats.t.rvs(3, loc=-6.2, scale=20, size=6551, random_state=np.random.default_rng(11))
        f = fit_noise_tls(x)
        assert abs(f.mu + 6.2) < 1.5 and abs(f.sigma - 20) < 1.5 and abs(f.nu - 3) < 0.5

    def test_tls_on_normal_data(self):
        x = np.random.default_rng(2).normal(0, 1, 6000)
        f = fit_noise_tls(x)
        assert f.nu > 20
        grid = np.linspace(-3, 3, 61)
        np.testing.assert_allclose(tls_pdf(grid, f.mu, f.sigma, f.nu), stats.norm.pdf(grid), atol=0.01)

    def test_fitted_density_normalised(self):
        x = stats.t.rvs(4, loc=1, scale=3, size=2000, random_state=np.random.default_rng(3))
        f = fit_noise_tls(x)
        area, _ = integrate.quad(tls_pdf, f.mu - 50 * f.sigma, f.mu + 50 * f.sigma,
                                 args=(f.mu, f.sigma, f.nu), limit=400, epsabs=1e-12)
        # mass outside +-50 sigma is below 1e-6 for the fitted nu
        assert area == pytest.approx(1.0, abs=1e-6 + stats.t.sf(50, f.nu) * 2)

    def test_tls_too_few(self):
        with pytest.raises(ValueError):
            fit_noise_tls(np.arange(5.0))

    @pytest.mark.parametrize("seed", range(5))
    def test_tls_dominates_normal(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_t(rng.uniform(1.5, 30), 400) * rng.uniform(0.5, 50)
        fit = fit_noise(x)
        assert fit.tls.log_likelihood >= fit.normal.log_likelihood - 1e-6
        assert fit.tls.nu > 1 and fit.tls.sigma > 0
        assert set(fit.log_likelihoods) == {"normal", "tls"}


class TestSpikes:
    def test_hand_trace(self):
        r = detect_spikes([1, 2, 9, 9, 2, 9], threshold=8)
        assert list(r.spike_times) == [2, 5]
        assert list(r.waiting_times) == [3]
        assert r.lambda_hat == pytest.approx(1 / 3)

    def test_monotone_single_spike(self):
        r = detect_spikes(np.arange(100.0))
        assert r.spike_times.size == 1
        assert r.lambda_hat is None

    def test_index_zero_counts(self):
        assert list(detect_spikes([9, 1, 1, 9], threshold=5).spike_times) == [0, 3]

    def test_tie_is_not_above(self):
        assert detect_spikes([1, 5, 1, 6], threshold=5).spike_times.tolist() == [3]

    def test_constant_rejected(self):
        with pytest.raises(SpectralError):
            detect_spikes(np.ones(10))

    @given(arrays(np.float64, st.integers(3, 200), elements=st.integers(-1000, 1000).map(float)),
           st.integers(-1000, 1000).map(float))
    def test_shift_invariant(self, x, c):
        if np.all(x == x[0]):
            return
        a, b = detect_spikes(x), detect_spikes(x + c)
        assert np.array_equal(a.spike_times, b.spike_times)

    def test_fit_exponential(self):
        assert fit_exponential([2, 2, 2]) == 0.5
        assert fit_exponential([69] * 10) == pytest.approx(0.0145, abs=5e-5)
        with pytest.raises(ValueError):
            fit_exponential([1, 0, 2])

    def test_exponential_sampling(self):
        w = np.random.default_rng(8).exponential(1 / 0.015, 500)
        assert abs(fit_exponential(w) / 0.015 - 1) < 0.15

    def test_ks_statistic_against_scipy(self, rng):
        w = rng.exponential(10, 300)
        ref = stats.kstest(w, stats.expon(scale=10).cdf).statistic
        assert ks_statistic_exponential(w, 0.1) == pytest.approx(ref, rel=1e-12)
