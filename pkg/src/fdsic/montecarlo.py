"""Trial orchestration, parameter sweeps, analytic predictions and the mimic experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import analytic
from ._parallel import parallel_map
from .cancellers import mean_report, passive_suppress, run_single
from .core import (
    CancellerKind,
    ChannelEstimate,
    ChannelModel,
    DigitalMode,
    EstimateMode,
    PhaseNoiseSpec,
    ResidualReport,
    Scenario,
    SignalBuffer,
    UsageError,
    cancellation_db,
    power,
    quantize_delay,
    seed_sequence,
)
from .estimators import estimate_scaling
from .rfchain import apply_dynamic_range, complex_gaussian, generate_tone
from .phasenoise import sample_phase_path

# ---------------------------------------------------------------------------
# Mimic experiment


@dataclass(frozen=True)
class MimicExperiment:
    """Two wired copies of one noisy source, cancelled against each other."""

    source_phase: PhaseNoiseSpec
    h1: complex = 1.0
    h2: complex = 1.0
    delays_s: Tuple[float, float] = (0.0, 0.0)
    sigma_noise_sq: float = 0.0
    dynamic_range_db: Optional[float] = None
    n: int = 1 << 20
    carrier_hz: float = 2.4e9
    tone_hz: float = 1e6
    sample_period_s: float = 21.7e-9
    n_train: Optional[int] = None

    def __post_init__(self):
        if self.n <= 0:
            raise UsageError("n must be > 0")
        if len(self.delays_s) != 2:
            raise UsageError("delays_s needs two entries")
        if self.sigma_noise_sq < 0:
            raise UsageError("sigma_noise_sq must be >= 0")

    def replace(self, **changes) -> "MimicExperiment":
        import dataclasses

        return dataclasses.replace(self, **changes)

    def predict(self, d: int) -> float:
        """Predicted cancellation (dB) at lag ``d``, range cap included."""
        T = self.sample_period_s
        d1, d2 = (quantize_delay(x, T) for x in self.delays_s)
        lag = (d + d2 - d1) * T
        r = self.source_phase.correlation(lag)
        p1 = abs(self.h1) ** 2
        # The residual holds the difference of two samples of one path.
        res = analytic.mimic_residual(p1, 2.0 * self.source_phase.variance_rad2, r, self.sigma_noise_sq)
        before = p1 + self.sigma_noise_sq
        if self.dynamic_range_db is not None and math.isfinite(self.dynamic_range_db):
            res += before * 10.0 ** (-self.dynamic_range_db / 10.0)
        return cancellation_db(before, res)


def _mimic_branches(exp: MimicExperiment, d_max: int, seed) -> Tuple[SignalBuffer, SignalBuffer]:
    T = exp.sample_period_s
    d1, d2 = (quantize_delay(x, T) for x in exp.delays_s)
    if exp.n <= d_max + 1:
        raise UsageError(f"n = {exp.n} too short for d = {d_max}")
    keys = seed if isinstance(seed, (list, tuple)) else (seed,)
    lead = max(d1, d2)
    phi = sample_phase_path(exp.source_phase, exp.n + lead, T, seed=seed_sequence(exp.source_phase.seed, *keys))
    x = generate_tone(exp.tone_hz, exp.n, T).samples
    rng = np.random.default_rng(seed_sequence(0x3131, *keys))
    w = 2.0 * math.pi * (exp.carrier_hz + exp.tone_hz) * T
    ys = []
    for h, dk in ((exp.h1, d1), (exp.h2, d2)):
        ph = phi[lead - dk : lead - dk + exp.n]
        y = h * np.exp(-1j * w * dk) * np.exp(1j * ph) * x
        if exp.sigma_noise_sq > 0:
            y = y + complex_gaussian(exp.n, exp.sigma_noise_sq, rng)
        ys.append(SignalBuffer(y, T))
    return ys[0], ys[1]


def mimic_delay_sweep(exp: MimicExperiment, ds: Sequence[int], seed=0) -> List[float]:
    """Cancellation (dB) for each lag in ``ds`` from one realisation of both branches."""
    ds = [int(d) for d in ds]
    if not ds or min(ds) < 0:
        raise UsageError("lags must be a non-empty list of non-negative integers")
    y1, y2 = _mimic_branches(exp, max(ds), seed)
    keys = seed if isinstance(seed, (list, tuple)) else (seed,)
    out = []
    for d in ds:
        n_eff = exp.n - d
        n_train = n_eff if exp.n_train is None else min(exp.n_train, n_eff)
        hc = estimate_scaling(y1, y2, d, n_train)
        first = y1.replace(y1.samples[d:], 0)
        res = first.replace(first.samples - hc * y2.samples[:n_eff])
        res = apply_dynamic_range(res, first, exp.dynamic_range_db, seed=seed_sequence(0x5A5A, *keys))
        out.append(cancellation_db(power(first), power(res)))
    return out


def simulate_mimic_experiment(
    source_phase: PhaseNoiseSpec,
    h1: complex,
    h2: complex,
    delays_s: Tuple[float, float],
    d: int,
    sigma_noise_sq: float,
    dynamic_range_db: Optional[float],
    n: int,
    seed=0,
    **kwargs,
) -> float:
    """Cancellation (dB) of ``y1[i] - h_c(d) y2[i-d]``; see :class:`MimicExperiment` for extras."""
    exp = MimicExperiment(source_phase, h1, h2, tuple(delays_s), sigma_noise_sq, dynamic_range_db, n, **kwargs)
    return mimic_delay_sweep(exp, [d], seed)[0]


# ---------------------------------------------------------------------------
# Analytic prediction for a scenario


@dataclass(frozen=True)
class Prediction:
    power_before: float
    power_after_passive: float
    power_after_analog: float
    power_after_digital: Optional[float] = None

    def report(self) -> ResidualReport:
        return ResidualReport(self.power_before, self.power_after_passive, self.power_after_analog,
                              self.power_after_digital)


def signal_correlation(scenario: Scenario, lag_samples: int) -> complex:
    """``R_x(l T)`` of the scenario's transmitted waveform."""
    s, T = scenario.signal, scenario.sample_period_s
    if s.kind == "tone":
        return complex(np.exp(2j * np.pi * s.freq_hz * lag_samples * T))
    return complex(np.sinc(s.bandwidth_hz * lag_samples * T))


def _phase_terms(scenario: Scenario, delta: int, tau: int) -> Tuple[float, float, float]:
    """(sigma_si^2, sigma_down^2, r_phi) in the closed forms' conventions."""
    T = scenario.sample_period_s
    tx, cancel, rx = scenario.tx_osc, scenario.cancel_osc, scenario.rx_osc
    s_si, s_c, s_d = (o.phase_noise.variance_rad2 for o in (tx, cancel, rx))
    kind = scenario.canceller
    if kind is CancellerKind.PRE_MIXER:
        if cancel.lo_group == tx.lo_group:
            return s_si, s_d, float(tx.phase_noise.correlation(delta * T))
        # Independent LOs: 2 s^2 (1 - 0) with s^2 the mean of the two variances.
        return 0.5 * (s_si + s_c), s_d, 0.0
    if kind is CancellerKind.POST_MIXER:
        return s_si, s_d, float(tx.phase_noise.correlation((delta - tau) * T))
    return s_si, s_d, 0.0


def predict(scenario: Scenario) -> Optional[Prediction]:
    """Closed-form powers for a scenario, or ``None`` when no closed form applies.

    Covered: single-tap channels with any analog estimate (least-squares
    treated as perfect), optional perfect digital stage; multi-tap channels
    with perfect analog estimates and a signal that is white across the tap
    spacing.
    """
    T = scenario.sample_period_s
    p = scenario.p_si
    sn = scenario.noise.thermal_variance
    channel = passive_suppress(scenario.si_channel, scenario.passive_db)
    before = p * scenario.si_channel.energy
    after_passive = p * channel.energy
    kind = scenario.canceller
    digital = scenario.digital_estimate
    perfect_digital = digital is not None and not isinstance(digital, ChannelModel) and \
        DigitalMode(digital) is DigitalMode.PERFECT

    if len(channel.taps) == 1:
        tap = channel.taps[0]
        delta = quantize_delay(tap.delay_s, T)
        est = scenario.estimate
        if isinstance(est, ChannelEstimate):
            rho, tau = est.rho, quantize_delay(est.tau_s, T)
        else:
            rho, tau = 1.0, delta
        h_sq = p * abs(tap.gain) ** 2
        s_si, s_d, r_phi = _phase_terms(scenario, delta, tau)
        r_x = analytic.effective_signal_correlation(
            rho, signal_correlation(scenario, tau - delta), scenario.carrier_hz, (delta - tau) * T)
        r_x = float(np.clip(r_x, -1.0, 1.0))
        analog_p = analytic.analog_residual(kind, h_sq, rho, r_x, r_phi, s_si, s_d, sn)
        dig_p = None
        if perfect_digital:
            dig_p = analytic.digital_residual(kind, h_sq * analytic.estimate_term(rho, r_x), 0.0, h_sq,
                                              s_si, s_d, r_phi, sn)
        elif digital is not None:
            return None
        return Prediction(before, after_passive, analog_p, dig_p)

    if not (isinstance(scenario.estimate, EstimateMode) and scenario.estimate is EstimateMode.PERFECT):
        return None
    if digital is not None and not perfect_digital:
        return None
    total = 0.0
    for tap in channel.taps:
        delta = quantize_delay(tap.delay_s, T)
        s_si, s_d, r_phi = _phase_terms(scenario, delta, delta)
        total += p * abs(tap.gain) ** 2 * analytic.phase_term(kind, s_si, s_d, r_phi)
    analog_p = total + sn
    return Prediction(before, after_passive, analog_p, analog_p if perfect_digital else None)


# ---------------------------------------------------------------------------
# Trials and sweeps


@dataclass(frozen=True)
class TrialStats:
    """Trial-mean powers plus trial-level spread of the dB figures."""

    report: ResidualReport
    reports: Tuple[ResidualReport, ...]

    @property
    def trials(self) -> int:
        return len(self.reports)

    def _values(self, metric: str) -> np.ndarray:
        return np.array([getattr(r, metric) for r in self.reports], dtype=float)

    def mean_db(self, metric: str) -> float:
        return float(np.mean(self._values(metric)))

    def stderr_db(self, metric: str) -> float:
        """Standard error of the trial mean; ``nan`` for a single trial."""
        v = self._values(metric)
        if v.size < 2:
            return math.nan
        return float(np.std(v, ddof=1) / math.sqrt(v.size))

    def ci95_db(self, metric: str) -> Tuple[float, float]:
        from scipy import stats

        m, se = self.mean_db(metric), self.stderr_db(metric)
        if math.isnan(se):
            return (m, m)
        half = stats.t.ppf(0.975, self.trials - 1) * se
        return (m - half, m + half)


def run_trials(scenario: Scenario, trials: int, seed: int = 0, threads: Optional[int] = None) -> TrialStats:
    """Independent trials ``(seed, k)``, reduced in trial order."""
    if trials < 1:
        raise UsageError("trials must be >= 1")
    reports = parallel_map(lambda k: run_single(scenario, (seed, k))[0], range(trials), threads)
    return TrialStats(mean_report(reports), tuple(reports))


SCENARIO_AXES = ("sigma_phi_sq", "rho", "passive_db", "t_train", "K", "M")
AXES = SCENARIO_AXES + ("d",)


@dataclass(frozen=True)
class SweepRow:
    value: float
    report: ResidualReport
    predicted: Optional[ResidualReport] = None
    stats: Optional[TrialStats] = None
    extras: Dict[str, float] = field(default_factory=dict)

    def simulated_db(self) -> float:
        return self.report.active_db

    def predicted_db(self) -> Optional[float]:
        return None if self.predicted is None else self.predicted.active_db


def _with_variance(scenario: Scenario, v: float) -> Scenario:
    oscs = {}
    for name in ("tx_osc", "cancel_osc", "rx_osc"):
        o = getattr(scenario, name)
        oscs[name] = type(o)(o.carrier_hz, o.phase_noise.with_variance(v), o.lo_group)
    return scenario.replace(**oscs)


def _apply_axis(scenario: Scenario, axis: str, value) -> Scenario:
    if axis == "sigma_phi_sq":
        return _with_variance(scenario, float(value))
    if axis == "rho":
        tap = scenario.si_channel.taps[0]
        return scenario.replace(estimate=ChannelEstimate(complex(value), tap.delay_s))
    if axis == "passive_db":
        return scenario.replace(passive_db=float(value))
    if axis == "t_train":
        return scenario.replace(training_len=int(value))
    raise UsageError(f"unknown axis {axis!r}")


def _model_row(scenario: Scenario, axis: str, value: int, trials: int, seed: int) -> SweepRow:
    """K (wideband) or M (MIMO) row: sample the abstracted signal model."""
    k = int(value)
    if k < 1:
        raise UsageError(f"{axis} must be >= 1")
    T = scenario.sample_period_s
    tap = scenario.si_channel.taps[0]
    delta = quantize_delay(tap.delay_s, T)
    est = scenario.estimate
    rho, tau = (est.rho, quantize_delay(est.tau_s, T)) if isinstance(est, ChannelEstimate) else (1.0, delta)
    s_si, s_d, r_phi = _phase_terms(scenario, delta, tau)
    r_x = analytic.effective_signal_correlation(rho, signal_correlation(scenario, tau - delta),
                                                scenario.carrier_hz, (delta - tau) * T)
    params = analytic.model_params(scenario.canceller, rho, float(np.clip(r_x, -1, 1)), r_phi, s_si, s_d)
    coeff = params.beta_phi_sq if scenario.digital_estimate is None else params.gamma_phi_sq
    sn = scenario.noise.thermal_variance
    h_sq = abs(tap.gain) ** 2
    if axis == "K":
        model = analytic.Wideband(k)
        p_each = scenario.p_si / k
        before = scenario.p_si * h_sq
        pred = scenario.p_si * h_sq * coeff + k * sn
    else:
        model = analytic.Mimo(k, 1)
        p_each = scenario.p_si
        before = k * scenario.p_si * h_sq
        pred = k * scenario.p_si * h_sq * coeff + sn

    def one(t):
        bufs = analytic.signal_model_received(
            model, coeff, p_si=p_each, h_si=tap.gain, sigma_noise_sq=sn,
            n=scenario.n_samples, sample_period_s=T, seed=(seed, t))
        return float(sum(power(b) for b in bufs))

    measured = parallel_map(one, range(trials))
    rep = ResidualReport(before, before, float(np.mean(measured)))
    return SweepRow(float(value), rep, ResidualReport(before, before, pred))


def sweep(
    base: Union[Scenario, MimicExperiment],
    axis: str,
    values: Sequence,
    trials: int = 8,
    seed: int = 0,
    threads: Optional[int] = None,
) -> List[SweepRow]:
    """One row per value; every trial of every row reuses seeds ``(seed, k)``.

    Sharing seeds across rows (common random numbers) keeps row-to-row
    differences free of sampling noise, so monotone trends show cleanly.
    """
    if axis not in AXES:
        raise UsageError(f"unknown sweep axis {axis!r}; choose from {', '.join(AXES)}")
    values = list(values)
    if not values:
        raise UsageError("sweep needs at least one value")
    if trials < 1:
        raise UsageError("trials must be >= 1")

    if axis == "d":
        if not isinstance(base, MimicExperiment):
            raise UsageError("the d axis sweeps a MimicExperiment")
        ds = [int(v) for v in values]
        per_trial = parallel_map(lambda k: mimic_delay_sweep(base, ds, (seed, k)), range(trials), threads)
        arr = np.array(per_trial)
        rows = []
        for j, d in enumerate(ds):
            before = abs(base.h1) ** 2 + base.sigma_noise_sq
            db_mean = float(np.mean(arr[:, j]))
            rep = ResidualReport(before, before, before * 10.0 ** (-db_mean / 10.0))
            pred = ResidualReport(before, before, before * 10.0 ** (-base.predict(d) / 10.0))
            finite = trials > 1 and bool(np.all(np.isfinite(arr[:, j])))
            se = float(np.std(arr[:, j], ddof=1) / math.sqrt(trials)) if finite else math.nan
            rows.append(SweepRow(float(d), rep, pred, extras={"analog_db_stderr": se, "active_db_stderr": se}))
        return rows

    if not isinstance(base, Scenario):
        raise UsageError(f"axis {axis!r} sweeps a Scenario")
    if axis in ("K", "M"):
        return [_model_row(base, axis, v, trials, seed) for v in values]

    rows = []
    for v in values:
        sc = _apply_axis(base, axis, v)
        st = run_trials(sc, trials, seed, threads)
        pred = predict(sc)
        extras = {"analog_db_stderr": st.stderr_db("analog_db"), "active_db_stderr": st.stderr_db("active_db")}
        if axis == "rho":
            extras["rho_imag"] = float(np.imag(v))
        rows.append(SweepRow(float(np.real(v)), st.report, None if pred is None else pred.report(), st, extras))
    return rows
