"""Phase-noise statistics: jitter from a dBc/Hz spectrum and time-domain paths."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import signal as sps

from .core import PhaseModel, PhaseNoiseSpec, UsageError, rng_from

SeedLike = Union[int, np.random.SeedSequence, Sequence[int]]


@dataclass(frozen=True)
class SpectrumSegment:
    """Piecewise-constant single-sideband phase-noise level over an offset band."""

    f_start_hz: float
    f_end_hz: float
    level_dbc_per_hz: float

    def __post_init__(self):
        if not self.f_end_hz > self.f_start_hz:
            raise UsageError("segment needs f_end_hz > f_start_hz")


def jitter_from_spectrum(segments: Sequence[SpectrumSegment], f1_hz: float, f2_hz: float) -> float:
    """RMS phase jitter (rad) integrated over offsets ``[f1_hz, f2_hz]``.

    The integral of ``10**(L(f)/10)`` is exact for piecewise-constant L.
    Levels of ``-inf`` are allowed and contribute nothing.
    """
    if not f1_hz < f2_hz:
        raise UsageError("need f1_hz < f2_hz")
    segs = sorted(segments, key=lambda s: s.f_start_hz)
    for a, b in zip(segs, segs[1:]):
        if b.f_start_hz < a.f_end_hz:
            raise UsageError("spectrum segments overlap")
    covered = f1_hz
    total = 0.0
    for s in segs:
        lo, hi = max(s.f_start_hz, f1_hz), min(s.f_end_hz, f2_hz)
        if hi <= lo:
            continue
        if lo > covered:
            break
        total += 10.0 ** (s.level_dbc_per_hz / 10.0) * (hi - lo)
        covered = max(covered, hi)
    if covered < f2_hz:
        raise UsageError(f"spectrum does not cover [{f1_hz}, {f2_hz}] Hz (gap at {covered} Hz)")
    return math.sqrt(total)


def jitter_time_to_phase(delta_t_rms_s: float, carrier_hz: float) -> float:
    """Time jitter (s) -> phase jitter (rad): ``2 pi f_c dt``."""
    if delta_t_rms_s < 0 or carrier_hz < 0:
        raise UsageError("jitter and carrier must be >= 0")
    return 2.0 * math.pi * carrier_hz * delta_t_rms_s


def jitter_phase_to_time(sigma_phi_rad: float, carrier_hz: float) -> float:
    if sigma_phi_rad < 0 or not carrier_hz > 0:
        raise UsageError("need sigma >= 0 and carrier > 0")
    return sigma_phi_rad / (2.0 * math.pi * carrier_hz)


def _ar1_path(sigma: float, a: float, n: int, rng: np.random.Generator) -> np.ndarray:
    w = rng.standard_normal(n)
    w[0] *= sigma
    w[1:] *= sigma * math.sqrt(1.0 - a * a)
    return sps.lfilter([1.0], [1.0, -a], w)


def _table_path(spec: PhaseNoiseSpec, n: int, sample_period_s: float, rng: np.random.Generator) -> np.ndarray:
    # Circulant embedding; small negative eigenvalues from a non-PD table are clipped.
    last_lag = max(spec.table)
    span = min(n, int(math.ceil(last_lag / sample_period_s)) + 2)
    m = 1 << int(math.ceil(math.log2(max(2 * n, 2 * span, 2))))
    lags = np.minimum(np.arange(m), m - np.arange(m)) * sample_period_s
    r = np.asarray(spec.correlation(lags), dtype=float)
    lam = np.fft.rfft(r).real
    lam = np.clip(lam, 0.0, None)
    z = rng.standard_normal(lam.size) + 1j * rng.standard_normal(lam.size)
    z[0] = z[0].real * math.sqrt(2.0)
    if m % 2 == 0:
        z[-1] = z[-1].real * math.sqrt(2.0)
    path = np.fft.irfft(np.sqrt(lam * m / 2.0) * z, n=m)
    return path[:n]


def sample_phase_path(
    spec: PhaseNoiseSpec,
    n: int,
    sample_period_s: float,
    seed: Optional[SeedLike] = None,
) -> np.ndarray:
    """Stationary zero-mean Gaussian phase path of ``n`` samples (radians).

    ``seed`` overrides ``spec.seed``; trial runners pass a derived seed so
    each trial sees an independent realisation.
    """
    if n <= 0:
        raise UsageError("n must be > 0")
    if not sample_period_s > 0:
        raise UsageError("sample_period_s must be > 0")
    if spec.variance_rad2 == 0:
        return np.zeros(n)
    rng = rng_from(spec.seed if seed is None else seed)
    sigma = math.sqrt(spec.variance_rad2)
    if spec.model is PhaseModel.WHITE:
        return sigma * rng.standard_normal(n)
    if spec.model is PhaseModel.AR1:
        a = math.exp(-sample_period_s / spec.coherence_time_s)
        return _ar1_path(sigma, a, n, rng)
    if spec.model is PhaseModel.TABLE:
        return sigma * _table_path(spec, n, sample_period_s, rng)
    raise UsageError(f"unsupported phase-noise model {spec.model!r}")


def empirical_autocorrelation(path, max_lag: int) -> np.ndarray:
    """Biased sample ACF of a real sequence, normalised to 1 at lag 0.

    A constant path has zero variance after mean removal; its ACF is
    reported as all ones (degenerate).
    """
    x = np.asarray(path, dtype=float)
    n = x.size
    if not 0 <= max_lag < n:
        raise UsageError(f"max_lag must be in [0, {n - 1}]")
    if np.ptp(x) == 0.0:
        return np.ones(max_lag + 1)
    x = x - x.mean()
    c0 = float(np.dot(x, x))
    m = 1 << int(math.ceil(math.log2(2 * n)))
    f = np.fft.rfft(x, m)
    acov = np.fft.irfft(f * np.conj(f), m)[: max_lag + 1]
    return acov / c0
