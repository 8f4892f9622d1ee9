import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from fdsic.core import PhaseModel, PhaseNoiseSpec, UsageError
from fdsic.phasenoise import (
    SpectrumSegment,
    empirical_autocorrelation,
    jitter_from_spectrum,
    jitter_phase_to_time,
    jitter_time_to_phase,
    sample_phase_path,
)

T = 21.7e-9
N = 10 ** 6


class TestJitterFromSpectrum:
    def test_zero_power_band(self):
        segs = [SpectrumSegment(1e3, 1e5, -math.inf)]
        assert jitter_from_spectrum(segs, 1e3, 1e5) == 0.0

    def test_constant_segment_matches_quadrature(self):
        segs = [SpectrumSegment(1e3, 101e3, -100.0)]
        got = jitter_from_spectrum(segs, 1e3, 101e3)
        quad, _ = integrate.quad(lambda f: 10 ** (-100 / 10), 1e3, 101e3)
        assert got == pytest.approx(3.162e-3, rel=1e-3)
        assert got == pytest.approx(math.sqrt(quad), rel=1e-12)

    def test_piecewise_matches_quadrature(self):
        segs = [SpectrumSegment(1e3, 1e4, -80.0), SpectrumSegment(1e4, 1e5, -100.0), SpectrumSegment(1e5, 1e6, -120.0)]
        level = lambda f: 10 ** (next(s.level_dbc_per_hz for s in segs if s.f_start_hz <= f < s.f_end_hz) / 10)
        quad = sum(integrate.quad(level, s.f_start_hz, s.f_end_hz - 1e-9)[0] for s in segs)
        assert jitter_from_spectrum(segs, 1e3, 1e6) == pytest.approx(math.sqrt(quad), rel=1e-6)

    @given(st.floats(-140, -60), st.floats(1e2, 1e6))
    @settings(max_examples=30)
    def test_variances_add(self, level, width):
        one = jitter_from_spectrum([SpectrumSegment(0.0, width, level)], 0.0, width)
        two = jitter_from_spectrum([SpectrumSegment(0.0, width, level), SpectrumSegment(width, 2 * width, level)],
                                   0.0, 2 * width)
        assert two == pytest.approx(math.sqrt(2) * one, rel=1e-9)

    def test_partial_overlap_of_range(self):
        segs = [SpectrumSegment(0.0, 1e4, -100.0)]
        assert jitter_from_spectrum(segs, 2e3, 4e3) == pytest.approx(math.sqrt(1e-10 * 2e3))

    def test_uncovered_range(self):
        with pytest.raises(UsageError):
            jitter_from_spectrum([SpectrumSegment(1e3, 1e4, -100.0)], 1e3, 2e4)
        with pytest.raises(UsageError):
            jitter_from_spectrum([SpectrumSegment(1e3, 2e3, -100.0), SpectrumSegment(3e3, 4e3, -100.0)], 1e3, 4e3)

    def test_invalid_segments(self):
        with pytest.raises(UsageError):
            SpectrumSegment(2e3, 1e3, -100.0)
        with pytest.raises(UsageError):
            jitter_from_spectrum([SpectrumSegment(0, 2e3, -1), SpectrumSegment(1e3, 3e3, -1)], 0, 3e3)
        with pytest.raises(UsageError):
            jitter_from_spectrum([SpectrumSegment(0, 2e3, -1)], 2e3, 1e3)


class TestJitterConversion:
    def test_warp_radio(self):
        sigma = jitter_time_to_phase(0.83e-12, 2.4e9)
        assert sigma == pytest.approx(0.012516, abs=5e-6)
        assert math.degrees(sigma) == pytest.approx(0.717, abs=5e-4)

    def test_zero(self):
        assert jitter_time_to_phase(0.0, 2.4e9) == 0.0

    def test_signal_generator_round_trip(self):
        sigma = math.radians(0.066)
        assert sigma == pytest.approx(1.152e-3, rel=1e-3)
        dt = jitter_phase_to_time(sigma, 2.2e9)
        assert jitter_time_to_phase(dt, 2.2e9) == pytest.approx(sigma, rel=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(UsageError):
            jitter_time_to_phase(-1e-12, 2.4e9)
        with pytest.raises(UsageError):
            jitter_phase_to_time(-1e-3, 2.4e9)


class TestSamplePhasePath:
    def test_zero_variance(self):
        np.testing.assert_array_equal(sample_phase_path(PhaseNoiseSpec(0.0, PhaseModel.WHITE), 100, T), 0.0)

    def test_white_statistics(self):
        path = sample_phase_path(PhaseNoiseSpec(1e-4, PhaseModel.WHITE, seed=3), N, T)
        assert np.var(path) == pytest.approx(1e-4, rel=0.01)
        assert abs(empirical_autocorrelation(path, 1)[1]) < 4 / math.sqrt(N)

    def test_ar1_autocorrelation(self):
        tc = 470e-9
        spec = PhaseNoiseSpec(1.566e-4, PhaseModel.AR1, tc, seed=4)
        path = sample_phase_path(spec, N, T)
        lags = np.arange(0, int(3 * tc / T) + 1)
        acf = empirical_autocorrelation(path, int(lags[-1]))
        np.testing.assert_allclose(acf, np.exp(-lags * T / tc), atol=0.02)
        assert np.var(path) == pytest.approx(1.566e-4, rel=0.05)

    def test_table_autocorrelation(self):
        table = {0.0: 1.0, 5 * T: 0.6, 20 * T: 0.1, 40 * T: 0.0}
        spec = PhaseNoiseSpec(1e-4, PhaseModel.TABLE, table=table, seed=5)
        path = sample_phase_path(spec, N, T)
        lags = np.arange(0, 45)
        acf = empirical_autocorrelation(path, 44)
        np.testing.assert_allclose(acf, spec.correlation(lags * T), atol=0.02)
        assert np.var(path) == pytest.approx(1e-4, rel=0.03)

    @pytest.mark.parametrize("model", [PhaseModel.WHITE, PhaseModel.AR1, PhaseModel.TABLE])
    def test_seeded_determinism(self, model):
        spec = PhaseNoiseSpec(1e-4, model, 470e-9 if model is PhaseModel.AR1 else None,
                              {0.0: 1.0, 10 * T: 0.0} if model is PhaseModel.TABLE else None, seed=9)
        a = sample_phase_path(spec, 5000, T)
        b = sample_phase_path(spec, 5000, T)
        np.testing.assert_array_equal(a, b)
        c = sample_phase_path(spec, 5000, T, seed=10)
        assert not np.array_equal(a, c)

    @pytest.mark.parametrize("model", [PhaseModel.WHITE, PhaseModel.AR1, PhaseModel.TABLE])
    def test_small_angle_regime(self, model):
        sigma = 0.05
        spec = PhaseNoiseSpec(sigma ** 2, model, 470e-9 if model is PhaseModel.AR1 else None,
                              {0.0: 1.0, 10 * T: 0.0} if model is PhaseModel.TABLE else None, seed=2)
        path = sample_phase_path(spec, N, T)
        assert np.mean(np.abs(path) > 5 * sigma) < 1e-4

    def test_variance_additivity(self):
        a = sample_phase_path(PhaseNoiseSpec(1e-4, PhaseModel.AR1, 470e-9, seed=1), N, T)
        b = sample_phase_path(PhaseNoiseSpec(3e-4, PhaseModel.WHITE, seed=2), N, T)
        assert np.var(a + b) == pytest.approx(4e-4, rel=0.02)

    def test_invalid_arguments(self):
        spec = PhaseNoiseSpec(1e-4, PhaseModel.WHITE)
        with pytest.raises(UsageError):
            sample_phase_path(spec, 0, T)
        with pytest.raises(UsageError):
            sample_phase_path(spec, 10, 0.0)


class TestEmpiricalAutocorrelation:
    def test_constant_path_is_degenerate(self):
        np.testing.assert_array_equal(empirical_autocorrelation(np.full(50, 0.3), 5), np.ones(6))

    def test_lag_out_of_range(self):
        with pytest.raises(UsageError):
            empirical_autocorrelation(np.arange(10.0), 10)
        with pytest.raises(UsageError):
            empirical_autocorrelation(np.arange(10.0), -1)

    def test_matches_direct_sum(self):
        x = np.random.default_rng(0).standard_normal(200)
        acf = empirical_autocorrelation(x, 5)
        y = x - x.mean()
        brute = [np.dot(y[k:], y[: y.size - k]) / np.dot(y, y) for k in range(6)]
        np.testing.assert_allclose(acf, brute, atol=1e-12)
