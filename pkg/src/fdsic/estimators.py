"""Least-squares estimators used by the experiment and the cancellers."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .core import (
    ChannelEstimate,
    ChannelModel,
    ChannelTap,
    DegenerateInputError,
    SignalBuffer,
    UsageError,
    quantize_delay,
)


def estimate_scaling(y1: SignalBuffer, y2: SignalBuffer, d: int, n_train: int) -> complex:
    """Delayed LS scaling ``h_c(d)``.

    ``sum conj(y2[i-d]) y1[i] / sum |y2[i-d]|^2`` over ``i = d .. d+n_train-1``.
    """
    if d < 0:
        raise UsageError("d must be >= 0")
    if n_train <= 0 or n_train + d > min(len(y1), len(y2)):
        raise UsageError("n_train + d must fit in both buffers")
    a = y1.samples[d : d + n_train]
    b = y2.samples[:n_train]
    den = np.vdot(b, b).real
    if den == 0:
        raise DegenerateInputError("y2 is all zero over the training window")
    return complex(np.vdot(b, a) / den)


def _single_tap_fit(rx: np.ndarray, tx: np.ndarray, t_train: int, grid: np.ndarray):
    """Vectorised over leading axes: returns (best delay index, LS gain)."""
    dmax = int(grid.max())
    seg = rx[..., dmax : dmax + t_train]
    corr = np.empty(rx.shape[:-1] + (grid.size,), dtype=np.complex128)
    energy = np.empty(rx.shape[:-1] + (grid.size,))
    for k, d in enumerate(grid):
        ref = tx[..., dmax - d : dmax - d + t_train]
        corr[..., k] = np.sum(seg * np.conj(ref), axis=-1)
        energy[..., k] = np.sum(np.abs(ref) ** 2, axis=-1)
    if np.any(energy == 0):
        raise DegenerateInputError("training signal is zero for some delay hypothesis")
    # argmax returns the first maximum: the smallest delay wins ties.
    best = np.argmax(np.abs(corr) / np.sqrt(energy), axis=-1)
    c = np.take_along_axis(corr, best[..., None], axis=-1)[..., 0]
    e = np.take_along_axis(energy, best[..., None], axis=-1)[..., 0]
    return best, c / e


def ls_single_tap(rx: SignalBuffer, tx: SignalBuffer, t_train: int, delay_grid: Iterable[int]) -> ChannelTap:
    """Grid-search delay, then least-squares gain at that delay.

    The training window is ``rx[dmax : dmax + t_train]`` with ``dmax`` the
    largest grid delay, so every hypothesis sees full history. The returned
    gain is the effective baseband tap (carrier phase included).
    """
    grid = np.array(sorted(set(int(d) for d in delay_grid)))
    if grid.size == 0:
        raise UsageError("delay grid is empty")
    if grid.min() < 0:
        raise UsageError("delays must be >= 0")
    if t_train <= 0 or grid.max() + t_train > min(len(rx), len(tx)):
        raise UsageError("t_train plus the largest delay must fit in the buffers")
    best, gain = _single_tap_fit(rx.samples, tx.samples, t_train, grid)
    return ChannelTap(complex(gain), float(grid[int(best)]) * rx.sample_period_s)


def gain_mse_monte_carlo(
    gain: complex,
    delay: int,
    sigma_noise_sq: float,
    t_train: int,
    trials: int,
    rng: np.random.Generator,
    delay_grid: Sequence[int] = range(8),
    batch: int = 256,
) -> float:
    """Mean ``|g_hat - g|^2`` of ``ls_single_tap`` over independent noise draws.

    Each trial uses a fresh white unit-power training sequence.
    """
    grid = np.array(sorted(set(delay_grid)))
    n = int(grid.max()) + t_train
    err = []
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        x = (rng.standard_normal((b, n)) + 1j * rng.standard_normal((b, n))) / np.sqrt(2.0)
        rx = np.zeros_like(x)
        rx[:, delay:] = gain * x[:, : n - delay]
        rx += np.sqrt(sigma_noise_sq / 2.0) * (rng.standard_normal((b, n)) + 1j * rng.standard_normal((b, n)))
        best, g = _single_tap_fit(rx, x, t_train, grid)
        g = np.where(grid[best] == delay, g, np.nan)
        err.append(np.abs(g - gain) ** 2)
        done += b
    e = np.concatenate(err)
    if np.isnan(e).any():
        raise DegenerateInputError("delay search failed in some trials; SNR too low for this grid")
    return float(e.mean())


def true_residual_channel(
    si_channel: ChannelModel,
    analog_channel: ChannelModel,
    carrier_hz: float,
    sample_period_s: float,
) -> ChannelModel:
    """Residual SI channel left by the analog stage, carrier phases folded into the gains.

    For a single tap this is ``h (delta[i-D] e^{-j w_c D} - rho delta[i-tau] e^{-j w_c tau})``.
    Taps at equal sample delays are merged.
    """
    acc: dict = {}
    for sign, ch in ((1.0, si_channel), (-1.0, analog_channel)):
        for t in ch.taps:
            d = quantize_delay(t.delay_s, sample_period_s)
            g = sign * t.gain * np.exp(-2j * np.pi * carrier_hz * d * sample_period_s)
            acc[d] = acc.get(d, 0.0) + g
    taps = [ChannelTap(complex(g), d * sample_period_s) for d, g in sorted(acc.items())]
    return ChannelModel(tuple(taps))


def estimate_residual_channel(
    residual: SignalBuffer,
    x_si: SignalBuffer,
    t_train: int,
    max_taps: int,
    min_delay: int = 0,
) -> ChannelModel:
    """LS fit of an FIR residual channel at delays ``min_delay .. min_delay+max_taps-1``.

    Gains are effective baseband taps (use ``carrier_hz=0`` when applying).
    The fit uses the first ``t_train`` samples after the longest delay.
    """
    if max_taps < 1:
        raise UsageError("max_taps must be >= 1")
    delays = np.arange(min_delay, min_delay + max_taps)
    start = max(int(delays.max()), residual.valid_from)
    if t_train <= 0 or start + t_train > min(len(residual), len(x_si)):
        raise UsageError("training window does not fit in the buffers")
    x = x_si.samples
    A = np.stack([x[start - d : start - d + t_train] for d in delays], axis=1)
    y = residual.samples[start : start + t_train]
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < max_taps:
        raise DegenerateInputError(f"rank-deficient residual-channel fit (rank {rank} < {max_taps})")
    T = residual.sample_period_s
    return ChannelModel(tuple(ChannelTap(complex(c), float(d) * T) for c, d in zip(coef, delays)))


def relative_estimate(estimated: ChannelTap, true_gain: complex, carrier_hz: float, true_delay_s: float,
                      sample_period_s: float) -> ChannelEstimate:
    """Express an effective-tap estimate as ``(rho, tau)`` against the physical tap."""
    d = quantize_delay(true_delay_s, sample_period_s)
    k = quantize_delay(estimated.delay_s, sample_period_s)
    phys = estimated.gain * np.exp(2j * np.pi * carrier_hz * k * sample_period_s)
    if true_gain == 0:
        raise DegenerateInputError("true gain is zero")
    return ChannelEstimate(complex(phys / true_gain), k * sample_period_s if d is not None else estimated.delay_s)
