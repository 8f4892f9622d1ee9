"""Baseband-equivalent transmit -> channel -> receive operations.

Up- and down-conversion are represented by their baseband effect only: a
carrier-phase constant ``exp(-j 2 pi f_c delay)`` per tap and a
multiplicative ``exp(+-j phi[i])`` rotation for oscillator phase noise.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence, Union

import numpy as np

from .core import (
    ChannelModel,
    NoiseSpec,
    SignalBuffer,
    UsageError,
    power,
    quantize_delay,
    rng_from,
)

SeedLike = Union[int, np.random.SeedSequence, Sequence[int]]


def generate_tone(freq_hz: float, n: int, sample_period_s: float) -> SignalBuffer:
    """Unit-modulus complex exponential ``exp(j 2 pi f i T)``."""
    if n <= 0:
        raise UsageError("n must be > 0")
    i = np.arange(n)
    return SignalBuffer(np.exp(2j * np.pi * freq_hz * sample_period_s * i), sample_period_s)


def generate_bandlimited(bandwidth_hz: float, n: int, sample_period_s: float, seed: SeedLike = 0) -> SignalBuffer:
    """Unit-power random-phase multitone, flat on ``[-F/2, F/2]``.

    Tones sit on the length-``n`` DFT grid, so the power is exactly 1 and the
    circular autocorrelation is exactly that of the flat spectrum.
    """
    if n <= 0:
        raise UsageError("n must be > 0")
    fs = 1.0 / sample_period_s
    if bandwidth_hz < 0 or bandwidth_hz > fs * (1 + 1e-12):
        raise UsageError(f"bandwidth {bandwidth_hz} Hz outside [0, 1/T = {fs} Hz]")
    rng = rng_from(seed)
    freqs = np.fft.fftfreq(n, d=sample_period_s)
    active = np.abs(freqs) <= bandwidth_hz / 2.0 + 1e-9 * fs
    m = int(active.sum())
    spec = np.zeros(n, dtype=np.complex128)
    spec[active] = np.exp(2j * np.pi * rng.random(m))
    x = np.fft.ifft(spec) * (n / math.sqrt(m))
    return SignalBuffer(x, sample_period_s)


def autocorrelation(buffer: SignalBuffer, lags: Sequence[int]) -> np.ndarray:
    """Normalised complex ACF ``R(l) = <x[i] x*[i-l]> / <|x|^2>`` over the overlap."""
    x = buffer.samples
    n = x.size
    p = np.vdot(x, x).real / n
    out = np.empty(len(lags), dtype=np.complex128)
    for k, lag in enumerate(lags):
        lag = int(lag)
        if not 0 <= lag < n:
            raise UsageError("lag out of range")
        out[k] = np.vdot(x[: n - lag], x[lag:]) / (n - lag) / p
    return out


def autocorr_bound_constant(bandwidth_hz: float) -> float:
    """``c`` with ``1 - Re R(t) <= c t^2`` for any unit-power signal band-limited to F.

    From ``1 - cos(u) <= u^2 / 2`` and ``|f| <= F/2``: ``c = (2 pi)^2 F^2 / 8``.
    """
    return (2.0 * math.pi) ** 2 * bandwidth_hz ** 2 / 8.0


def _shift(x: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return x
    out = np.zeros_like(x)
    out[k:] = x[:-k]
    return out


def apply_channel(signal: SignalBuffer, channel: ChannelModel, carrier_hz: float) -> SignalBuffer:
    """Tapped-delay line with per-tap carrier phase.

    ``out[i] = sum_k g_k exp(-j 2 pi f_c D_k) x[i - d_k]`` where ``D_k`` is the
    tap delay quantised to ``d_k`` samples. Samples before the largest delay
    are zero-filled and the output's ``valid_from`` moves past them.
    """
    T = signal.sample_period_s
    n = len(signal)
    x = signal.samples
    out = np.zeros(n, dtype=np.complex128)
    longest = 0
    for tap in channel.taps:
        d = quantize_delay(tap.delay_s, T)
        if d >= n:
            raise UsageError(f"tap delay of {d} samples does not fit a buffer of {n}")
        longest = max(longest, d)
        g = tap.gain * np.exp(-2j * np.pi * carrier_hz * d * T)
        if d == 0:
            out += g * x
        else:
            out[d:] += g * x[:-d]
    return signal.replace(out, max(signal.valid_from, longest))


def delay_samples(x, k: int) -> np.ndarray:
    """Integer-sample delay of a real or complex array, zero-filled."""
    a = np.asarray(x)
    if not 0 <= k < a.size:
        raise UsageError("delay out of range")
    return _shift(a, k)


def apply_phase_rotation(signal: SignalBuffer, phase_path, sign: int = 1) -> SignalBuffer:
    """Multiply sample ``i`` by ``exp(j * sign * phi[i])``."""
    if sign not in (1, -1):
        raise UsageError("sign must be +1 or -1")
    phi = np.asarray(phase_path, dtype=float)
    n = len(signal)
    if phi.size < n:
        raise UsageError(f"phase path has {phi.size} samples, buffer has {n}")
    return signal.replace(signal.samples * np.exp(1j * sign * phi[:n]))


def complex_gaussian(n: int, variance: float, rng: np.random.Generator) -> np.ndarray:
    """Circularly-symmetric complex Gaussian, ``variance / 2`` per quadrature."""
    s = math.sqrt(variance / 2.0)
    return s * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def add_thermal_noise(signal: SignalBuffer, noise: NoiseSpec, seed: Optional[SeedLike] = None) -> SignalBuffer:
    if noise.thermal_variance == 0:
        return signal
    rng = rng_from(noise.seed if seed is None else seed)
    z = complex_gaussian(len(signal), noise.thermal_variance, rng)
    return signal.replace(signal.samples + z)


def apply_dynamic_range(
    signal: SignalBuffer,
    clean: SignalBuffer,
    range_db: Optional[float],
    seed: SeedLike = 0,
) -> SignalBuffer:
    """Add a Gaussian measurement floor ``range_db`` below ``power(clean)``.

    ``None`` or ``inf`` disables the cap.
    """
    if len(signal) != len(clean):
        raise UsageError("signal and clean buffers must have equal length")
    if range_db is None or math.isinf(range_db):
        return signal
    floor = power(clean) * 10.0 ** (-range_db / 10.0)
    z = complex_gaussian(len(signal), floor, rng_from(seed))
    return signal.replace(signal.samples + z)
