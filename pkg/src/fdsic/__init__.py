"""Self-interference cancellation in full-duplex radios: simulation and closed forms.

The package is layered bottom-up:

* :mod:`fdsic.core` - immutable domain types and power bookkeeping
* :mod:`fdsic.phasenoise` - jitter from spectra, stationary phase-noise paths
* :mod:`fdsic.rfchain` - baseband channel, mixers, noise and measurement floor
* :mod:`fdsic.estimators` - least-squares channel and scaling estimators
* :mod:`fdsic.cancellers` - analog cancellers and the passive/analog/digital cascade
* :mod:`fdsic.analytic` - closed-form residuals and the abstracted signal models
* :mod:`fdsic.montecarlo` - trials, sweeps and the mimic experiment
* :mod:`fdsic.cli` - the ``fdsic`` command
"""

from .core import (
    CancellerKind,
    ChannelEstimate,
    ChannelModel,
    ChannelTap,
    DegenerateInputError,
    DigitalMode,
    EstimateMode,
    NoiseSpec,
    OscillatorConfig,
    PhaseModel,
    PhaseNoiseSpec,
    ResidualReport,
    Scenario,
    SignalBuffer,
    SignalSpec,
    UsageError,
    cancellation_db,
    db,
    degrees_to_variance,
    power,
)

__all__ = [
    "CancellerKind",
    "ChannelEstimate",
    "ChannelModel",
    "ChannelTap",
    "DegenerateInputError",
    "DigitalMode",
    "EstimateMode",
    "NoiseSpec",
    "OscillatorConfig",
    "PhaseModel",
    "PhaseNoiseSpec",
    "ResidualReport",
    "Scenario",
    "SignalBuffer",
    "SignalSpec",
    "UsageError",
    "cancellation_db",
    "db",
    "degrees_to_variance",
    "power",
]

__version__ = "0.1.0"
