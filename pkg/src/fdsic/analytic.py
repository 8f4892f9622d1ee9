"""Closed-form residual powers, cancellation bounds and signal-model parameters.

Every function takes correlation values as plain numbers, so the formulas
can be checked against hand arithmetic without building a scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from .core import (
    CancellerKind,
    DegenerateInputError,
    SignalBuffer,
    UsageError,
    rng_from,
)
from .rfchain import apply_channel, complex_gaussian

SeedLike = Union[int, np.random.SeedSequence, Sequence[int]]


def _check_corr(name: str, value: float) -> None:
    if not -1.0 - 1e-12 <= value <= 1.0 + 1e-12:
        raise UsageError(f"{name} must lie in [-1, 1], got {value}")


def _check_nonneg(**values: float) -> None:
    for name, v in values.items():
        if v < 0:
            raise UsageError(f"{name} must be >= 0, got {v}")


def conventional_residual_bound(sigma_noise_sq: float, t_train: int) -> float:
    """Residual power bound of the phase-noise-free model: ``5 s^2 / T + s^2``."""
    if t_train < 1:
        raise UsageError("t_train must be >= 1")
    _check_nonneg(sigma_noise_sq=sigma_noise_sq)
    return 5.0 * sigma_noise_sq / t_train + sigma_noise_sq


def estimator_limit(h1: complex, h2: complex, sigma_noise_sq: float, phase: complex = 1.0) -> complex:
    """Large-N value of the delayed LS scaling, with its first-order approximation.

    Returns the exact limit ``(h1/h2) phase / (1 + s^2/|h2|^2)``; the
    familiar ``(h1/h2)(1 - s^2/|h2|^2)`` is its first-order expansion.
    """
    if h2 == 0:
        raise DegenerateInputError("h2 must be non-zero")
    return complex(h1 / h2 * phase / (1.0 + sigma_noise_sq / abs(h2) ** 2))


def mimic_residual(h1_sq: float, sigma_phi_sq: float, r_phi_at_dT: float, sigma_noise_sq: float) -> float:
    """Mimic-experiment residual ``|h1|^2 s_phi^2 (1 - R(dT)) + 2 s_n^2``.

    ``sigma_phi_sq`` is the variance of the phase *difference* term per unit
    ``(1 - R)``. When both branches see one source path of variance ``v``
    the difference ``phi[i] - phi[i-d]`` has variance ``2 v (1 - R)``, so
    pass ``2 v`` to get the simulated floor.
    """
    _check_corr("r_phi_at_dT", r_phi_at_dT)
    _check_nonneg(h1_sq=h1_sq, sigma_phi_sq=sigma_phi_sq, sigma_noise_sq=sigma_noise_sq)
    return h1_sq * sigma_phi_sq * (1.0 - r_phi_at_dT) + 2.0 * sigma_noise_sq


def mimic_noise_only_residual(a1: complex, a2: complex, sigma_noise_sq: float) -> float:
    """Exact large-N residual of the noise-only mimic experiment.

    With the LS scaling in place the residual is
    ``s^2 + |a1|^2 s^2 / (|a2|^2 + s^2)``, i.e. about ``2 s^2`` for equal
    branch gains.
    """
    _check_nonneg(sigma_noise_sq=sigma_noise_sq)
    return sigma_noise_sq + abs(a1) ** 2 * sigma_noise_sq / (abs(a2) ** 2 + sigma_noise_sq)


def effective_signal_correlation(rho: complex, r_x_complex: complex, carrier_hz: float, delta_minus_tau_s: float) -> float:
    """Real correlation that enters the estimate-error term.

    ``Re{conj(rho) R_x(tau - Delta) exp(-j w_c (Delta - tau))} / |rho|``. For
    ``tau = Delta`` and real positive ``rho`` this is 1; it makes
    ``1 + |rho|^2 - 2|rho| r`` equal ``E|x_Delta e^{-j w_c Delta} - rho x_tau e^{-j w_c tau}|^2`` exactly.
    """
    rho = complex(rho)
    if rho == 0:
        return 0.0
    rot = np.exp(-2j * np.pi * carrier_hz * delta_minus_tau_s)
    return float((np.conj(rho) * r_x_complex * rot).real / abs(rho))


def estimate_term(rho: complex, r_x: float) -> float:
    """``1 + |rho|^2 - 2 |rho| R_x``: SI-only residual of an imperfect estimate."""
    _check_corr("r_x", r_x)
    a = abs(complex(rho))
    return max(1.0 + a * a - 2.0 * a * r_x, 0.0)


def phase_term(kind: CancellerKind, sigma_si_sq: float, sigma_down_sq: float, r_phi: float) -> float:
    """Phase-noise part of the analog residual per unit ``|h_si|^2``."""
    kind = CancellerKind(kind)
    _check_corr("r_phi", r_phi)
    _check_nonneg(sigma_si_sq=sigma_si_sq, sigma_down_sq=sigma_down_sq)
    if kind is CancellerKind.BASEBAND_ANALOG:
        return sigma_si_sq + sigma_down_sq
    return 2.0 * sigma_si_sq * (1.0 - r_phi)


def analog_residual(
    kind: CancellerKind,
    h_si_sq: float,
    rho: complex,
    r_x: float,
    r_phi: float,
    sigma_si_sq: float,
    sigma_down_sq: float,
    sigma_noise_sq: float,
) -> float:
    """Residual power after analog cancellation with an imperfect estimate.

    ``r_phi`` is ``R_phi(Delta_si)`` for pre-mixer (0 for unmatched LOs) and
    ``R_phi(Delta_si - tau)`` for post-mixer; it is ignored for baseband.
    """
    _check_nonneg(h_si_sq=h_si_sq, sigma_noise_sq=sigma_noise_sq)
    return h_si_sq * (estimate_term(rho, r_x) + phase_term(kind, sigma_si_sq, sigma_down_sq, r_phi)) + sigma_noise_sq


def digital_residual(
    kind: CancellerKind,
    analog_estimate_term: float,
    digital_estimate_term: float,
    h_si_sq: float,
    sigma_si_sq: float,
    sigma_down_sq: float,
    r_phi: float,
    sigma_noise_sq: float,
) -> float:
    """Residual power after analog plus digital cancellation.

    ``analog_estimate_term`` is the power of the residual SI channel output
    (``|h|^2`` times the estimate term), ``digital_estimate_term`` the power
    of the digital estimate error output.
    """
    kind = CancellerKind(kind)
    _check_nonneg(
        analog_estimate_term=analog_estimate_term,
        digital_estimate_term=digital_estimate_term,
        h_si_sq=h_si_sq,
        sigma_noise_sq=sigma_noise_sq,
    )
    floor = h_si_sq * phase_term(kind, sigma_si_sq, sigma_down_sq, r_phi)
    if kind is CancellerKind.BASEBAND_ANALOG:
        return digital_estimate_term + floor + sigma_noise_sq
    return digital_estimate_term + floor + analog_estimate_term * (sigma_si_sq + sigma_down_sq) + sigma_noise_sq


def digital_residual_exact(
    h_si_sq: float,
    rho: complex,
    sigma_si_sq: float,
    sigma_cancel_sq: float,
    sigma_down_sq: float,
    sigma_noise_sq: float,
) -> float:
    """First-order residual of an unmatched pre-mixer canceller after perfect digital cancellation.

    ``|h|^2 (s_si^2 + |rho|^2 s_c^2 + |1 - rho|^2 s_down^2) + s_n^2`` for
    ``tau = Delta``. It agrees with :func:`digital_residual` when
    ``rho = 1 + j u`` and all variances are equal; for real ``rho < 1`` the
    closed form above omits a negative cross term.
    """
    rho = complex(rho)
    return h_si_sq * (sigma_si_sq + abs(rho) ** 2 * sigma_cancel_sq + abs(1 - rho) ** 2 * sigma_down_sq) + sigma_noise_sq


def rho_for_analog_cancellation(target_db: float, phase_floor: float) -> complex:
    """Quadrature gain error ``rho = 1 + j u`` giving ``target_db`` of analog cancellation.

    Solves ``1 / (u^2 + phase_floor) = 10^(target/10)`` for a unit channel
    and a tone-like signal, where ``phase_floor`` is the per-unit phase term.
    """
    need = 10.0 ** (-target_db / 10.0) - phase_floor
    if need < 0:
        raise UsageError(f"{target_db} dB exceeds the phase-noise floor {-10 * math.log10(phase_floor):.2f} dB")
    return complex(1.0, math.sqrt(need))


def two_tap_residual_and_ratio(
    e_h1_sq: float,
    e_h2_sq: float,
    sigma_phi_sq: float,
    r_phi_d1: float,
    r_phi_d2: float,
) -> tuple:
    """Residual ``2 s^2 (E1 (1 - R1) + E2 (1 - R2))`` and the cancellation ratio.

    The ratio ``(E1 + E2) / (E1 (1 - R1) + E2 (1 - R2))`` does not depend on
    the ``2 s^2`` factor.
    """
    _check_corr("r_phi_d1", r_phi_d1)
    _check_corr("r_phi_d2", r_phi_d2)
    _check_nonneg(e_h1_sq=e_h1_sq, e_h2_sq=e_h2_sq, sigma_phi_sq=sigma_phi_sq)
    den = e_h1_sq * (1.0 - r_phi_d1) + e_h2_sq * (1.0 - r_phi_d2)
    if den <= 0:
        raise DegenerateInputError("both two-tap residual terms are zero")
    return 2.0 * sigma_phi_sq * den, (e_h1_sq + e_h2_sq) / den


@dataclass(frozen=True)
class ModelParams:
    """Phase-noise coefficients of the abstracted received-signal models."""

    beta_phi_sq: float
    gamma_phi_sq: float

    def __post_init__(self):
        if self.beta_phi_sq < 0 or self.gamma_phi_sq < 0:
            raise UsageError("model parameters must be >= 0")


def model_params(
    kind: CancellerKind,
    rho: complex,
    r_x: float,
    r_phi: float,
    sigma_si_sq: float,
    sigma_down_sq: float,
) -> ModelParams:
    """``beta^2`` (analog only) and ``gamma^2`` (analog + digital) for one canceller kind."""
    kind = CancellerKind(kind)
    beta = phase_term(kind, sigma_si_sq, sigma_down_sq, r_phi)
    if kind is CancellerKind.BASEBAND_ANALOG:
        return ModelParams(beta, beta)
    gamma = estimate_term(rho, r_x) * (sigma_si_sq + sigma_down_sq) + beta
    return ModelParams(beta, gamma)


def cancellation_floor_db(residual: float, before: float = 1.0) -> float:
    if residual <= 0:
        return math.inf
    return 10.0 * math.log10(before / residual)


# Abstracted received-signal models ------------------------------------------


@dataclass(frozen=True)
class Narrowband:
    pass


@dataclass(frozen=True)
class Wideband:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise UsageError("Wideband needs k >= 1")


@dataclass(frozen=True)
class Mimo:
    m: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise UsageError("Mimo needs m, n >= 1")


SignalModel = Union[Narrowband, Wideband, Mimo]


def _as_list(value, count: int, name: str) -> list:
    if np.ndim(value) == 0:
        return [value] * count
    out = list(value)
    if len(out) != count:
        raise UsageError(f"{name} needs {count} entries, got {len(out)}")
    return out


def signal_model_received(
    model: SignalModel,
    phase_coeff_sq: float,
    *,
    p_si=1.0,
    h_si=1.0,
    sigma_noise_sq: float = 0.0,
    n: int,
    sample_period_s: float,
    seed: SeedLike = 0,
    x_si: Optional[Sequence[SignalBuffer]] = None,
    residual=None,
    x_signal: Optional[Sequence[SignalBuffer]] = None,
    h_signal=None,
    p_signal=None,
) -> List[SignalBuffer]:
    """Sample the abstracted received-signal model.

    Each output buffer is
    ``signal term + sqrt(P_si)|h_si| c z_pn + residual-channel term + z_noise``
    with ``c^2 = phase_coeff_sq`` (pass beta^2 or gamma^2).

    * ``Narrowband()``: one buffer; scalar ``p_si``, ``h_si``.
    * ``Wideband(k)``: ``k`` per-band buffers; ``p_si``/``h_si`` per band,
      thermal variance ``sigma_noise_sq`` in every band.
    * ``Mimo(m, n)``: ``n`` receive buffers; ``p_si``/``h_si`` per transmit
      antenna; the phase term is scaled by ``sqrt(sum_m |h_m|^2 P_m)``.

    ``residual`` is a ``ChannelModel`` (effective baseband taps) or a list of
    them, applied to the matching ``x_si`` buffer(s). ``x_signal``/``h_signal``/
    ``p_signal`` likewise add the signal of interest.
    """
    from .core import ChannelModel  # local: keeps the public import list short

    if n <= 0:
        raise UsageError("n must be > 0")
    _check_nonneg(phase_coeff_sq=phase_coeff_sq, sigma_noise_sq=sigma_noise_sq)
    rng = rng_from(seed)
    c = math.sqrt(phase_coeff_sq)

    if isinstance(model, Narrowband):
        n_out, n_tx = 1, 1
    elif isinstance(model, Wideband):
        n_out, n_tx = model.k, model.k
    elif isinstance(model, Mimo):
        n_out, n_tx = model.n, model.m
    else:
        raise UsageError(f"unknown signal model {model!r}")

    p = [float(v) for v in _as_list(p_si, n_tx, "p_si")]
    h = [complex(v) for v in _as_list(h_si, n_tx, "h_si")]
    if any(v < 0 for v in p):
        raise UsageError("p_si entries must be >= 0")

    def _buffers(value, count, name):
        if value is None:
            return None
        if isinstance(value, SignalBuffer):
            value = [value]
        out = list(value)
        if len(out) != count:
            raise UsageError(f"{name} needs {count} entries, got {len(out)}")
        for b in out:
            if len(b) != n:
                raise UsageError(f"{name} buffers must have n = {n} samples")
        return out

    xs = _buffers(x_si, n_tx, "x_si")
    xsig = _buffers(x_signal, n_tx, "x_signal")
    if residual is not None and isinstance(residual, ChannelModel):
        residual = [residual] * n_tx
    if residual is not None:
        residual = _as_list(residual, n_tx, "residual")
        if xs is None:
            raise UsageError("a residual channel needs x_si buffers")

    outputs = []
    for r in range(n_out):
        if isinstance(model, Mimo):
            scale = math.sqrt(sum(abs(hh) ** 2 * pp for hh, pp in zip(h, p)))
            tx_idx = range(n_tx)
        else:
            scale = math.sqrt(p[r]) * abs(h[r])
            tx_idx = [r]
        y = scale * c * complex_gaussian(n, 1.0, rng)
        for m in tx_idx:
            if residual is not None:
                y = y + math.sqrt(p[m]) * apply_channel(xs[m], residual[m], 0.0).samples
            if xsig is not None:
                ps = _as_list(1.0 if p_signal is None else p_signal, n_tx, "p_signal")[m]
                hs = _as_list(1.0 if h_signal is None else h_signal, n_tx, "h_signal")[m]
                y = y + math.sqrt(ps) * complex(hs) * xsig[m].samples
        if sigma_noise_sq > 0:
            y = y + complex_gaussian(n, sigma_noise_sq, rng)
        outputs.append(SignalBuffer(y, sample_period_s))
    return outputs
