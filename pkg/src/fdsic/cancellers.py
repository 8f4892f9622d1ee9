"""Cancelling-signal construction and the passive -> analog -> digital cascade.

Every signal is complex baseband. The self-interference at the receiver is
``rx(x_si) = [h * (x_si e^{j phi_tx})] e^{-j phi_rx}``; the analog cancelling
signal is added to it with the phase-noise placement of each architecture:

* pre-mixer: ``-(h_hat * x_si) e^{j phi_cancel(t)} e^{-j phi_rx(t)}``
* post-mixer: ``-(h_hat * (x_si e^{j phi_tx})) e^{-j phi_rx(t)}``
* baseband analog: ``-(h_hat * x_si)``, no oscillator involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ._parallel import parallel_map
from .core import (
    CancellerKind,
    ChannelEstimate,
    ChannelModel,
    ChannelTap,
    DigitalMode,
    EstimateMode,
    ResidualReport,
    Scenario,
    SignalBuffer,
    UsageError,
    power,
    quantize_delay,
    seed_sequence,
)
from .estimators import estimate_residual_channel, ls_single_tap, true_residual_channel
from .phasenoise import sample_phase_path
from .rfchain import (
    add_thermal_noise,
    apply_channel,
    apply_phase_rotation,
    complex_gaussian,
    generate_bandlimited,
    generate_tone,
)

SeedLike = Union[int, Sequence[int]]

# Stream tags keep the signal, noise and signal-of-interest draws apart.
_TAG_SI = 0x5151
_TAG_SOI = 0x5012
_TAG_NOISE = 0x2015


def _keys(seed: SeedLike) -> tuple:
    if isinstance(seed, (list, tuple)):
        return tuple(int(s) for s in seed)
    return (int(seed),)


@dataclass(frozen=True)
class PhasePaths:
    """Phase-noise paths (radians) seen by the transmit, cancel and receive oscillators."""

    tx: np.ndarray
    cancel: Optional[np.ndarray]
    rx: Optional[np.ndarray]


@dataclass(frozen=True)
class StageTrace:
    """Diagnostics for one stage; powers are ``power()`` of the matching buffers."""

    before: SignalBuffer
    after: SignalBuffer
    power_before: float
    power_after: float
    phase_paths: Optional[PhasePaths] = None
    extras: Dict[str, object] = field(default_factory=dict)


def draw_phase_paths(scenario: Scenario, seed: SeedLike = 0) -> PhasePaths:
    """One path per LO group; oscillators in the same group share it."""
    keys = _keys(seed)
    cache: dict = {}
    n, T = scenario.n_samples, scenario.sample_period_s

    def path(osc):
        g = osc.lo_group
        if g not in cache:
            ss = seed_sequence(osc.phase_noise.seed, g, *keys)
            cache[g] = sample_phase_path(osc.phase_noise, n, T, seed=ss)
        return cache[g]

    return PhasePaths(path(scenario.tx_osc), path(scenario.cancel_osc), path(scenario.rx_osc))


def generate_si_signal(scenario: Scenario, seed: SeedLike = 0) -> SignalBuffer:
    """Unit-power transmitted waveform described by ``scenario.signal``."""
    s = scenario.signal
    n, T = scenario.n_samples, scenario.sample_period_s
    if s.kind == "tone":
        return generate_tone(s.freq_hz, n, T)
    return generate_bandlimited(s.bandwidth_hz, n, T, seed=seed_sequence(s.seed, _TAG_SI, *_keys(seed)))


def passive_suppress(channel: ChannelModel, suppression_db: float) -> ChannelModel:
    """Attenuate the earliest (line-of-sight) tap's power by ``suppression_db``."""
    if suppression_db < 0:
        raise UsageError("passive suppression must be >= 0 dB")
    if suppression_db == 0:
        return channel
    k = 10.0 ** (-suppression_db / 20.0)
    first, *rest = channel.taps
    return ChannelModel((ChannelTap(first.gain * k, first.delay_s), *rest))


def receive_si(x_si: SignalBuffer, channel: ChannelModel, paths: PhasePaths, carrier_hz: float) -> SignalBuffer:
    """Self-interference after the transmit mixer, the channel and the receive mixer."""
    up = apply_phase_rotation(x_si, paths.tx, +1)
    rx = apply_channel(up, channel, carrier_hz)
    if paths.rx is None:
        raise UsageError("receive oscillator path missing")
    return apply_phase_rotation(rx, paths.rx, -1)


def build_cancelling_signal(
    kind: CancellerKind,
    estimate: ChannelModel,
    x_si: SignalBuffer,
    paths: PhasePaths,
    carrier_hz: float,
) -> SignalBuffer:
    """Baseband contribution of the analog cancelling signal at the receiver (already negated)."""
    kind = CancellerKind(kind)
    if kind is CancellerKind.PRE_MIXER:
        if paths.cancel is None or paths.rx is None:
            raise UsageError("pre-mixer cancelling needs cancel and receive oscillator paths")
        c = apply_channel(x_si, estimate, carrier_hz)
        c = apply_phase_rotation(c, paths.cancel, +1)
        c = apply_phase_rotation(c, paths.rx, -1)
    elif kind is CancellerKind.POST_MIXER:
        if paths.tx is None or paths.rx is None:
            raise UsageError("post-mixer cancelling needs transmit and receive oscillator paths")
        c = apply_phase_rotation(x_si, paths.tx, +1)
        c = apply_channel(c, estimate, carrier_hz)
        c = apply_phase_rotation(c, paths.rx, -1)
    else:
        c = apply_channel(x_si, estimate, carrier_hz)
    return c.replace(-c.samples)


def _add(a: SignalBuffer, b: SignalBuffer) -> SignalBuffer:
    return a.replace(a.samples + b.samples, max(a.valid_from, b.valid_from))


def _sub(a: SignalBuffer, b: SignalBuffer) -> SignalBuffer:
    return a.replace(a.samples - b.samples, max(a.valid_from, b.valid_from))


def _delay_grid(channel: ChannelModel, T: float) -> range:
    dmax = quantize_delay(channel.max_delay_s, T)
    return range(0, max(16, 2 * dmax + 1))


def _resolve_analog_estimate(
    scenario: Scenario,
    channel: ChannelModel,
    x_si: SignalBuffer,
    observed: SignalBuffer,
) -> ChannelModel:
    est = scenario.estimate
    T = scenario.sample_period_s
    if isinstance(est, ChannelEstimate):
        return est.as_channel(channel)
    if isinstance(est, ChannelModel):
        return est
    if EstimateMode(est) is EstimateMode.PERFECT:
        return channel
    tap = ls_single_tap(observed, x_si, scenario.training_len, _delay_grid(channel, T))
    k = quantize_delay(tap.delay_s, T)
    phys = tap.gain * np.exp(2j * np.pi * scenario.carrier_hz * k * T)
    return ChannelModel.single(complex(phys), tap.delay_s)


def _signal_of_interest(scenario: Scenario, paths: PhasePaths, seed: SeedLike) -> Optional[SignalBuffer]:
    if scenario.p_signal == 0 or scenario.signal_channel is None:
        return None
    rng = np.random.default_rng(seed_sequence(_TAG_SOI, scenario.signal.seed, *_keys(seed)))
    x = SignalBuffer(math.sqrt(scenario.p_signal) * complex_gaussian(scenario.n_samples, 1.0, rng),
                     scenario.sample_period_s)
    y = apply_channel(x, scenario.signal_channel, scenario.carrier_hz)
    return apply_phase_rotation(y, paths.rx, -1)


def run_analog_stage(scenario: Scenario, seed: SeedLike = 0) -> Tuple[SignalBuffer, StageTrace]:
    """Passive suppression, channel, phase noise, analog cancellation and thermal noise.

    Returns the received buffer after analog cancellation (signal of
    interest included) and a trace whose ``power_after`` counts only the
    residual interference plus thermal noise.
    """
    keys = _keys(seed)
    fc = scenario.carrier_hz
    channel = passive_suppress(scenario.si_channel, scenario.passive_db)
    paths = draw_phase_paths(scenario, keys)
    x_si = generate_si_signal(scenario, keys)
    x_si = x_si.replace(math.sqrt(scenario.p_si) * x_si.samples)

    si_rx = receive_si(x_si, channel, paths, fc)
    noise_seed = seed_sequence(scenario.noise.seed, _TAG_NOISE, *keys)
    noisy = add_thermal_noise(si_rx, scenario.noise, seed=noise_seed)
    soi = _signal_of_interest(scenario, paths, keys)
    observed = noisy if soi is None else _add(noisy, soi)

    est_channel = _resolve_analog_estimate(scenario, channel, x_si, observed)
    cancel = build_cancelling_signal(scenario.canceller, est_channel, x_si, paths, fc)
    interference = _add(noisy, cancel)
    out = interference if soi is None else _add(interference, soi)
    trace = StageTrace(
        before=si_rx,
        after=out,
        power_before=power(si_rx),
        power_after=power(interference),
        phase_paths=paths,
        extras={
            "x_si": x_si,
            "channel": channel,
            "estimate_channel": est_channel,
            "interference": interference,
            "signal_of_interest": soi,
        },
    )
    return out, trace


def run_digital_stage(
    residual: SignalBuffer,
    x_si: SignalBuffer,
    digital_estimate: Union[ChannelModel, DigitalMode],
    kind: CancellerKind,
    *,
    training_len: int = 1000,
    max_taps: int = 4,
    min_delay: int = 0,
    signal_of_interest: Optional[SignalBuffer] = None,
) -> Tuple[SignalBuffer, StageTrace]:
    """Subtract ``h_hat_residual * x_si`` from the analog residual.

    ``digital_estimate`` is either a ``ChannelModel`` of effective baseband
    taps (the perfect-estimate path) or ``DigitalMode.LEAST_SQUARES``, which
    fits ``max_taps`` taps from ``min_delay`` on the first ``training_len``
    valid samples.
    """
    kind = CancellerKind(kind)
    if isinstance(digital_estimate, ChannelModel):
        h_hat = digital_estimate
    elif DigitalMode(digital_estimate) is DigitalMode.LEAST_SQUARES:
        h_hat = estimate_residual_channel(residual, x_si, training_len, max_taps, min_delay)
    else:
        raise UsageError("PERFECT digital mode needs the true residual channel; pass it as a ChannelModel")
    replica = apply_channel(x_si, h_hat, 0.0)
    out = _sub(residual, replica)

    def interference(buf):
        return buf if signal_of_interest is None else _sub(buf, signal_of_interest)

    before_i, after_i = interference(residual), interference(out)
    after_i = after_i.replace(after_i.samples, max(after_i.valid_from, before_i.valid_from))
    trace = StageTrace(
        before=residual,
        after=out,
        power_before=power(before_i),
        power_after=power(after_i),
        extras={"kind": kind, "estimate_channel": h_hat},
    )
    return out, trace


def run_single(scenario: Scenario, seed: SeedLike = 0) -> Tuple[ResidualReport, Dict[str, StageTrace]]:
    """One trial of the full cascade."""
    T, fc = scenario.sample_period_s, scenario.carrier_hz
    out, analog = run_analog_stage(scenario, seed)
    x_si = analog.extras["x_si"]
    before = apply_channel(x_si, scenario.si_channel, fc)
    after_passive = apply_channel(x_si, analog.extras["channel"], fc)
    traces = {"analog": analog}
    digital_power = None
    if scenario.digital_estimate is not None:
        est = scenario.digital_estimate
        if not isinstance(est, ChannelModel) and DigitalMode(est) is DigitalMode.PERFECT:
            est = true_residual_channel(analog.extras["channel"], analog.extras["estimate_channel"], fc, T)
        delays = [quantize_delay(t.delay_s, T) for t in analog.extras["channel"].taps]
        delays += [quantize_delay(t.delay_s, T) for t in analog.extras["estimate_channel"].taps]
        _, digital = run_digital_stage(
            out,
            x_si,
            est,
            scenario.canceller,
            training_len=scenario.training_len,
            max_taps=scenario.digital_taps,
            min_delay=min(delays),
            signal_of_interest=analog.extras["signal_of_interest"],
        )
        traces["digital"] = digital
        digital_power = digital.power_after
        # Compare both stages over the same valid window.
        analog_power = power(analog.extras["interference"].replace(
            analog.extras["interference"].samples, digital.after.valid_from))
    else:
        analog_power = analog.power_after
    report = ResidualReport(power(before), power(after_passive), analog_power, digital_power)
    return report, traces


def mean_report(reports: Sequence[ResidualReport]) -> ResidualReport:
    digital = [r.power_after_digital for r in reports]
    return ResidualReport(
        float(np.mean([r.power_before for r in reports])),
        float(np.mean([r.power_after_passive for r in reports])),
        float(np.mean([r.power_after_analog for r in reports])),
        None if digital[0] is None else float(np.mean(digital)),
    )


def run_cascade(
    scenario: Scenario,
    passive_db: Optional[float] = None,
    trials: int = 1,
    seed: int = 0,
    threads: Optional[int] = None,
) -> ResidualReport:
    """Trial-averaged residual powers of the passive -> analog -> digital cascade.

    Trial ``k`` uses seed keys ``(seed, k)``; ``passive_db`` overrides the
    scenario's value when given.
    """
    if trials < 1:
        raise UsageError("trials must be >= 1")
    if passive_db is not None:
        scenario = scenario.replace(passive_db=passive_db)
    reports = parallel_map(lambda k: run_single(scenario, (seed, k))[0], range(trials), threads)
    return mean_report(reports)
