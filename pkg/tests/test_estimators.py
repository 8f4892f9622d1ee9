import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdsic.core import ChannelModel, ChannelTap, DegenerateInputError, SignalBuffer, UsageError
from fdsic.estimators import (
    estimate_residual_channel,
    estimate_scaling,
    gain_mse_monte_carlo,
    ls_single_tap,
    relative_estimate,
    true_residual_channel,
)
from fdsic.rfchain import apply_channel, complex_gaussian, generate_bandlimited

T = 21.7e-9
FC = 2.4e9


def _white(n, seed=0):
    return SignalBuffer(complex_gaussian(n, 1.0, np.random.default_rng(seed)), T)


class TestEstimateScaling:
    def test_self_scaling(self):
        y = _white(1000)
        assert estimate_scaling(y, y, 0, 1000) == 1 + 0j

    @given(st.complex_numbers(max_magnitude=100, allow_nan=False, allow_infinity=False))
    @settings(max_examples=30, deadline=None)
    def test_exact_linear_relation(self, g):
        y2 = _white(500, 1)
        y1 = y2.replace(g * y2.samples)
        assert estimate_scaling(y1, y2, 0, 500) == pytest.approx(g, abs=1e-12 * (1 + abs(g)))

    def test_delayed_relation(self):
        y2 = _white(600, 2)
        y1 = y2.replace(np.r_[np.zeros(5), 0.5j * y2.samples[:-5]])
        assert estimate_scaling(y1, y2, 5, 500) == pytest.approx(0.5j, abs=1e-12)

    @given(st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False, allow_infinity=False))
    @settings(max_examples=20, deadline=None)
    def test_scale_equivariant(self, a):
        y1, y2 = _white(400, 3), _white(400, 4)
        base = estimate_scaling(y1, y2, 2, 300)
        scaled = estimate_scaling(y1.replace(a * y1.samples), y2, 2, 300)
        assert scaled == pytest.approx(a * base, rel=1e-9)

    def test_zero_denominator(self):
        with pytest.raises(DegenerateInputError):
            estimate_scaling(_white(10), SignalBuffer(np.zeros(10), T), 0, 10)

    def test_window_must_fit(self):
        y = _white(10)
        with pytest.raises(UsageError):
            estimate_scaling(y, y, 3, 8)
        with pytest.raises(UsageError):
            estimate_scaling(y, y, -1, 5)


class TestLsSingleTap:
    def test_noiseless_exact_recovery(self):
        x = _white(2000, 5)
        g, d = 0.6 - 0.3j, 4
        rx = apply_channel(x, ChannelModel.single(g, d * T), FC)
        tap = ls_single_tap(rx, x, 1000, range(10))
        assert round(tap.delay_s / T) == d
        # The estimate is the effective tap; converting back gives rho = 1.
        rel = relative_estimate(tap, g, FC, d * T, T)
        assert rel.rho == pytest.approx(1.0, abs=1e-12)
        assert rel.tau_s == pytest.approx(d * T)

    def test_tie_goes_to_smallest_delay(self):
        x = SignalBuffer(np.ones(100), T)
        tap = ls_single_tap(x, x, 50, [3, 1, 2])
        assert tap.delay_s == pytest.approx(1 * T)

    def test_empty_grid(self):
        x = _white(100)
        with pytest.raises(UsageError):
            ls_single_tap(x, x, 10, [])

    def test_training_too_long(self):
        x = _white(100)
        with pytest.raises(UsageError):
            ls_single_tap(x, x, 95, range(8))

    def test_mse_at_t100(self):
        rng = np.random.default_rng(1)
        mse = gain_mse_monte_carlo(0.8 + 0.2j, 2, 0.01, 100, 10 ** 4, rng)
        # E[1/sum|x|^2] = 1/(T - 1) for unit complex Gaussian training.
        assert mse == pytest.approx(1e-4, rel=0.15)

    def test_unbiased_gain_at_true_delay(self):
        rng = np.random.default_rng(2)
        g, sn, t_train, trials = 0.5 - 0.5j, 0.01, 64, 10 ** 4
        n = t_train + 3
        x = complex_gaussian(trials * n, 1.0, rng).reshape(trials, n)
        rx = np.zeros_like(x)
        rx[:, 3:] = g * x[:, :-3]
        rx += complex_gaussian(trials * n, sn, rng).reshape(trials, n)
        seg, ref = rx[:, 3:], x[:, : t_train]
        est = np.sum(seg * np.conj(ref), axis=1) / np.sum(np.abs(ref) ** 2, axis=1)
        bound = 4 * math.sqrt(sn / (trials * t_train))
        assert abs(est.mean() - g) < bound
        tap = ls_single_tap(SignalBuffer(rx[0], T), SignalBuffer(x[0], T), t_train, [3])
        assert tap.gain == pytest.approx(est[0])

    def test_mse_decays_inversely(self):
        rng = np.random.default_rng(3)
        ts = np.array([10, 100, 1000])
        mse = [gain_mse_monte_carlo(1.0, 1, 0.01, int(t), 2000, rng) for t in ts]
        slope = np.polyfit(np.log10(ts), np.log10(mse), 1)[0]
        assert slope == pytest.approx(-1.0, abs=0.1)

    def test_low_snr_delay_failure_is_reported(self):
        with pytest.raises(DegenerateInputError):
            gain_mse_monte_carlo(0.01, 3, 10.0, 4, 200, np.random.default_rng(0))


class TestResidualChannel:
    def test_perfect_mode_known_taps(self):
        h, d = 0.8 + 0.1j, 5
        si = ChannelModel.single(h, d * T)
        est = ChannelModel.single(0.9 * h, d * T)
        res = true_residual_channel(si, est, FC, T)
        assert len(res.taps) == 1
        assert res.taps[0].gain == pytest.approx(h * 0.1 * np.exp(-2j * np.pi * FC * d * T))

    def test_perfect_analog_gives_zero_channel(self):
        si = ChannelModel.single(0.7j, 3 * T)
        res = true_residual_channel(si, si, FC, T)
        assert res.taps[0].gain == 0

    def test_two_tap_residual_for_delay_error(self):
        si = ChannelModel.single(1.0, 3 * T)
        est = ChannelModel.single(0.9, 4 * T)
        res = true_residual_channel(si, est, FC, T)
        assert [round(t.delay_s / T) for t in res.taps] == [3, 4]
        assert res.taps[1].gain == pytest.approx(-0.9 * np.exp(-2j * np.pi * FC * 4 * T))

    def test_lstsq_recovers_single_tap(self):
        n, d = 5000, 4
        h = 0.6 - 0.2j
        x = _white(n, 7)
        si = ChannelModel.single(h, d * T)
        analog = ChannelModel.single(0.9 * h, d * T)
        residual = apply_channel(x, true_residual_channel(si, analog, FC, T), 0.0)
        fit = estimate_residual_channel(residual, x, 2000, 4, min_delay=3)
        expected = h * (1 - 0.9) * np.exp(-2j * np.pi * FC * d * T)
        gains = {round(t.delay_s / T): t.gain for t in fit.taps}
        assert abs(gains[d] - expected) < 1e-6
        assert all(abs(g) < 1e-6 for k, g in gains.items() if k != d)

    def test_perfect_analog_fit_below_noise_floor(self):
        n = 20000
        x = _white(n, 8)
        noise = SignalBuffer(complex_gaussian(n, 1e-6, np.random.default_rng(9)), T)
        fit = estimate_residual_channel(noise, x, n - 10, 4)
        assert max(abs(t.gain) for t in fit.taps) < 4 * math.sqrt(1e-6 / (n - 10))

    def test_multi_tap_fit_reaches_thermal_floor(self):
        n = 20000
        x = SignalBuffer(generate_bandlimited(1 / T, n, T, seed=1).samples, T)
        ch = ChannelModel((ChannelTap(0.1, 2 * T), ChannelTap(-0.05j, 3 * T), ChannelTap(0.02, 5 * T)))
        sn = 1e-6
        y = apply_channel(x, ch, 0.0)
        y = y.replace(y.samples + complex_gaussian(n, sn, np.random.default_rng(3)))
        fit = estimate_residual_channel(y, x, n - 10, 4, min_delay=2)
        err = y.samples - apply_channel(x, fit, 0.0).samples
        assert np.mean(np.abs(err[10:]) ** 2) <= sn * 1.02

    def test_rank_deficient(self):
        x = SignalBuffer(np.ones(100), T)
        with pytest.raises(DegenerateInputError):
            estimate_residual_channel(x, x, 50, 3)

    def test_invalid(self):
        x = _white(100)
        with pytest.raises(UsageError):
            estimate_residual_channel(x, x, 50, 0)
        with pytest.raises(UsageError):
            estimate_residual_channel(x, x, 99, 4)
