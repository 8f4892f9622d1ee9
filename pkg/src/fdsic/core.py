"""Domain types shared across the simulator.

All types are frozen dataclasses. Sample arrays are stored as read-only
``complex128`` numpy arrays, so instances can be shared between worker
threads without copying.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

# Tolerance on the unit transmit-power constraint.
POWER_EPS = 1e-9


class UsageError(ValueError):
    """Invalid argument or violated precondition."""


class DegenerateInputError(ValueError):
    """Input is well formed but the requested quantity is undefined."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def db(ratio: float) -> float:
    """Power ratio in decibels; ``inf`` for a zero denominator."""
    if ratio <= 0:
        return -math.inf
    return 10.0 * math.log10(ratio)


def from_db(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def cancellation_db(before: float, after: float) -> float:
    """``10 log10(before / after)``."""
    if after <= 0:
        return math.inf
    return db(before / after)


def degrees_to_variance(sigma_deg: float) -> float:
    """RMS phase jitter in degrees -> phase variance in rad^2."""
    if sigma_deg < 0:
        raise UsageError("phase jitter must be >= 0 degrees")
    return math.radians(sigma_deg) ** 2


def quantize_delay(delay_s: float, sample_period_s: float) -> int:
    """Nearest integer number of samples for a delay in seconds."""
    if delay_s < 0:
        raise UsageError(f"delay must be >= 0, got {delay_s}")
    return int(round(delay_s / sample_period_s))


@dataclass(frozen=True)
class SignalBuffer:
    """Uniformly sampled complex baseband sequence.

    ``valid_from`` marks the first sample that has full delayed history;
    earlier samples are zero-filled edges and are excluded from ``power``.
    """

    samples: np.ndarray
    sample_period_s: float
    valid_from: int = 0

    def __post_init__(self):
        s = np.array(self.samples, dtype=np.complex128, copy=True).ravel()
        if s.size == 0:
            raise UsageError("SignalBuffer must be non-empty")
        if not np.all(np.isfinite(s)):
            raise UsageError("SignalBuffer samples must be finite")
        if not (self.sample_period_s > 0 and math.isfinite(self.sample_period_s)):
            raise UsageError("sample_period_s must be > 0")
        if not 0 <= self.valid_from < s.size:
            raise UsageError("valid_from must index into the buffer")
        object.__setattr__(self, "samples", _readonly(s))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def valid(self) -> np.ndarray:
        return self.samples[self.valid_from:]

    def replace(self, samples: np.ndarray, valid_from: Optional[int] = None) -> "SignalBuffer":
        vf = self.valid_from if valid_from is None else valid_from
        return SignalBuffer(samples, self.sample_period_s, vf)


def power(buffer: SignalBuffer) -> float:
    """Mean ``|sample|^2`` over the valid region of the buffer."""
    if not isinstance(buffer, SignalBuffer):
        raise UsageError("power() expects a SignalBuffer")
    v = buffer.valid
    return float(np.mean(v.real ** 2 + v.imag ** 2))


def check_transmit_power(buffer: SignalBuffer, limit: float = 1.0) -> None:
    """Raise if a transmit buffer exceeds the unit average-power constraint."""
    p = power(buffer)
    if p > limit + POWER_EPS:
        raise UsageError(f"transmit power {p:.6g} exceeds limit {limit}")


class PhaseModel(enum.Enum):
    WHITE = "white"
    AR1 = "ar1"
    TABLE = "table"


@dataclass(frozen=True)
class PhaseNoiseSpec:
    """Stationary Gaussian phase noise: variance plus autocorrelation model.

    ``coherence_time_s`` is used by AR1 (``R(t) = exp(-|t|/tc)``).
    ``table`` maps lags in seconds to correlation values for TABLE; values
    between tabulated lags are linearly interpolated and taken as zero
    beyond the last lag.
    """

    variance_rad2: float
    model: PhaseModel = PhaseModel.AR1
    coherence_time_s: Optional[float] = None
    table: Optional[Mapping[float, float]] = None
    seed: int = 0

    def __post_init__(self):
        if not (self.variance_rad2 >= 0 and math.isfinite(self.variance_rad2)):
            raise UsageError("phase-noise variance must be finite and >= 0")
        model = PhaseModel(self.model)
        object.__setattr__(self, "model", model)
        if model is PhaseModel.AR1:
            if self.coherence_time_s is None or not self.coherence_time_s > 0:
                raise UsageError("AR1 phase noise needs coherence_time_s > 0")
        if model is PhaseModel.TABLE:
            if not self.table:
                raise UsageError("TABLE phase noise needs a lag -> correlation table")
            lags = sorted(float(k) for k in self.table)
            vals = [float(self.table[k]) for k in sorted(self.table, key=float)]
            if lags[0] != 0.0 or vals[0] != 1.0:
                raise UsageError("TABLE correlation must be 1 at lag 0")
            if any(lag < 0 for lag in lags):
                raise UsageError("TABLE lags must be >= 0")
            if any(not -1.0 <= v <= 1.0 for v in vals):
                raise UsageError("TABLE correlations must lie in [-1, 1]")
            object.__setattr__(self, "table", dict(zip(lags, vals)))
        if not 0 <= int(self.seed) < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned integer")

    def correlation(self, lag_s) -> np.ndarray | float:
        """Normalised autocorrelation ``R(lag)`` of the model."""
        lag = np.abs(np.asarray(lag_s, dtype=float))
        if self.model is PhaseModel.WHITE:
            r = (lag == 0).astype(float)
        elif self.model is PhaseModel.AR1:
            r = np.exp(-lag / self.coherence_time_s)
        else:
            lags = np.array(sorted(self.table))
            vals = np.array([self.table[k] for k in lags])
            r = np.interp(lag, lags, vals, right=0.0)
            if lags.size == 1:
                r = (lag == 0).astype(float)
        return float(r) if np.ndim(r) == 0 else r

    def with_variance(self, variance_rad2: float) -> "PhaseNoiseSpec":
        return PhaseNoiseSpec(variance_rad2, self.model, self.coherence_time_s, self.table, self.seed)


@dataclass(frozen=True)
class OscillatorConfig:
    """One local oscillator. Equal ``lo_group`` means one shared phase path."""

    carrier_hz: float
    phase_noise: PhaseNoiseSpec
    lo_group: int = 0

    def __post_init__(self):
        if not self.carrier_hz > 0:
            raise UsageError("carrier_hz must be > 0")


@dataclass(frozen=True)
class ChannelTap:
    gain: complex
    delay_s: float = 0.0

    def __post_init__(self):
        g = complex(self.gain)
        if not (math.isfinite(g.real) and math.isfinite(g.imag)):
            raise UsageError("tap gain must be finite")
        if not (self.delay_s >= 0 and math.isfinite(self.delay_s)):
            raise UsageError("tap delay must be finite and >= 0")
        object.__setattr__(self, "gain", g)


@dataclass(frozen=True)
class ChannelModel:
    """Tapped-delay-line channel; taps are kept sorted by delay."""

    taps: tuple

    def __post_init__(self):
        taps = tuple(t if isinstance(t, ChannelTap) else ChannelTap(*t) for t in self.taps)
        if not taps:
            raise UsageError("a channel needs at least one tap")
        object.__setattr__(self, "taps", tuple(sorted(taps, key=lambda t: t.delay_s)))

    @classmethod
    def single(cls, gain: complex, delay_s: float = 0.0) -> "ChannelModel":
        return cls((ChannelTap(gain, delay_s),))

    @property
    def energy(self) -> float:
        return float(sum(abs(t.gain) ** 2 for t in self.taps))

    @property
    def max_delay_s(self) -> float:
        return self.taps[-1].delay_s

    def scaled(self, factor: complex) -> "ChannelModel":
        return ChannelModel(tuple(ChannelTap(t.gain * factor, t.delay_s) for t in self.taps))


@dataclass(frozen=True)
class ChannelEstimate:
    """Single-tap estimate ``rho * h_si`` at delay ``tau_s`` of the true tap."""

    rho: complex = 1.0
    tau_s: float = 0.0

    def __post_init__(self):
        r = complex(self.rho)
        if not (math.isfinite(r.real) and math.isfinite(r.imag)):
            raise UsageError("rho must be finite")
        if not self.tau_s >= 0:
            raise UsageError("tau_s must be >= 0")
        object.__setattr__(self, "rho", r)

    @classmethod
    def perfect(cls, channel: ChannelModel) -> "ChannelEstimate":
        return cls(1.0, channel.taps[0].delay_s)

    @classmethod
    def relative_to(cls, estimated: ChannelTap, true: ChannelTap) -> "ChannelEstimate":
        if true.gain == 0:
            raise DegenerateInputError("true tap gain is zero")
        return cls(estimated.gain / true.gain, estimated.delay_s)

    def is_perfect(self, channel: ChannelModel, sample_period_s: Optional[float] = None) -> bool:
        delta = channel.taps[0].delay_s
        if sample_period_s is None:
            same = self.tau_s == delta
        else:
            same = quantize_delay(self.tau_s, sample_period_s) == quantize_delay(delta, sample_period_s)
        return self.rho == 1 and same

    def as_channel(self, channel: ChannelModel) -> ChannelModel:
        if len(channel.taps) != 1:
            raise UsageError("a (rho, tau) estimate applies to single-tap channels only")
        return ChannelModel.single(self.rho * channel.taps[0].gain, self.tau_s)


@dataclass(frozen=True)
class NoiseSpec:
    thermal_variance: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (self.thermal_variance >= 0 and math.isfinite(self.thermal_variance)):
            raise UsageError("thermal_variance must be finite and >= 0")


class CancellerKind(enum.Enum):
    PRE_MIXER = "pre_mixer"
    POST_MIXER = "post_mixer"
    BASEBAND_ANALOG = "baseband_analog"


class DigitalMode(enum.Enum):
    """How the digital stage obtains its residual-channel estimate."""

    PERFECT = "perfect"
    LEAST_SQUARES = "least_squares"


class EstimateMode(enum.Enum):
    """Analog estimate sources other than an explicit ``ChannelEstimate``."""

    PERFECT = "perfect"
    LEAST_SQUARES = "least_squares"


@dataclass(frozen=True)
class SignalSpec:
    """Transmitted self-interference waveform (unit power before scaling)."""

    kind: str = "tone"
    freq_hz: float = 1e6
    bandwidth_hz: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("tone", "bandlimited"):
            raise UsageError(f"unknown signal kind {self.kind!r}")
        if self.bandwidth_hz < 0:
            raise UsageError("bandwidth_hz must be >= 0")


AnalogEstimate = Union[ChannelEstimate, EstimateMode]
DigitalEstimate = Union[None, DigitalMode, ChannelModel]


@dataclass(frozen=True)
class Scenario:
    """Complete description of one cancellation experiment."""

    si_channel: ChannelModel
    tx_osc: OscillatorConfig
    cancel_osc: OscillatorConfig
    rx_osc: OscillatorConfig
    canceller: CancellerKind = CancellerKind.PRE_MIXER
    estimate: AnalogEstimate = EstimateMode.PERFECT
    digital_estimate: DigitalEstimate = None
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    p_si: float = 1.0
    p_signal: float = 0.0
    n_samples: int = 1 << 20
    training_len: int = 1000
    sample_period_s: float = 21.7e-9
    signal: SignalSpec = field(default_factory=SignalSpec)
    signal_channel: Optional[ChannelModel] = None
    passive_db: float = 0.0
    digital_taps: int = 4

    def __post_init__(self):
        object.__setattr__(self, "canceller", CancellerKind(self.canceller))
        if self.p_si < 0 or self.p_signal < 0:
            raise UsageError("powers must be >= 0")
        if self.n_samples <= 0 or self.training_len <= 0:
            raise UsageError("n_samples and training_len must be > 0")
        if self.n_samples < self.training_len:
            raise UsageError("n_samples must be >= training_len")
        if not self.sample_period_s > 0:
            raise UsageError("sample_period_s must be > 0")
        if self.passive_db < 0:
            raise UsageError("passive_db must be >= 0")
        if self.digital_taps < 1:
            raise UsageError("digital_taps must be >= 1")
        if isinstance(self.estimate, ChannelEstimate) and len(self.si_channel.taps) != 1:
            raise UsageError("a (rho, tau) estimate requires a single-tap SI channel")
        groups: dict = {}
        for name in ("tx_osc", "cancel_osc", "rx_osc"):
            osc = getattr(self, name)
            prev = groups.setdefault(osc.lo_group, osc.phase_noise)
            if prev != osc.phase_noise:
                raise UsageError(
                    f"{name}: oscillators sharing lo_group {osc.lo_group} must have identical phase noise"
                )

    @property
    def carrier_hz(self) -> float:
        return self.tx_osc.carrier_hz

    def oscillators(self) -> dict:
        return {"tx": self.tx_osc, "cancel": self.cancel_osc, "rx": self.rx_osc}

    def replace(self, **changes) -> "Scenario":
        import dataclasses

        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ResidualReport:
    """Per-stage residual powers and cancellation amounts (dB)."""

    power_before: float
    power_after_passive: float
    power_after_analog: float
    power_after_digital: Optional[float] = None

    def __post_init__(self):
        for name in ("power_before", "power_after_passive", "power_after_analog", "power_after_digital"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise UsageError(f"{name} must be >= 0")

    @property
    def passive_db(self) -> float:
        return cancellation_db(self.power_before, self.power_after_passive)

    @property
    def analog_db(self) -> float:
        return cancellation_db(self.power_after_passive, self.power_after_analog)

    @property
    def digital_db(self) -> Optional[float]:
        if self.power_after_digital is None:
            return None
        return cancellation_db(self.power_after_analog, self.power_after_digital)

    @property
    def final_power(self) -> float:
        if self.power_after_digital is None:
            return self.power_after_analog
        return self.power_after_digital

    @property
    def active_db(self) -> float:
        """Analog plus digital cancellation."""
        return cancellation_db(self.power_after_passive, self.final_power)

    @property
    def total_db(self) -> float:
        return cancellation_db(self.power_before, self.final_power)

    def as_dict(self) -> dict:
        return {
            "power_before": self.power_before,
            "power_after_passive": self.power_after_passive,
            "power_after_analog": self.power_after_analog,
            "power_after_digital": self.power_after_digital,
            "passive_db": self.passive_db,
            "analog_db": self.analog_db,
            "digital_db": self.digital_db,
            "total_db": self.total_db,
        }


def seed_sequence(*keys: int) -> np.random.SeedSequence:
    """Deterministic, order-sensitive seed derivation from integer keys."""
    return np.random.SeedSequence([int(k) & 0xFFFFFFFFFFFFFFFF for k in keys])


def rng_from(seed: Union[int, np.random.SeedSequence, Sequence[int]]) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    if isinstance(seed, (list, tuple)):
        return np.random.default_rng(seed_sequence(*seed))
    return np.random.default_rng(seed_sequence(seed))
