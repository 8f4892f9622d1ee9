"""Three analog canceller architectures under the same oscillator.

* pre-mixer: the cancelling signal is taken at RF before the receive mixer.
* post-mixer: it is injected after the receive mixer.
* baseband analog: it is synthesised from the baseband samples with its own LO.

Each is simulated with a perfect channel estimate and compared with the
closed-form prediction.
"""

from fdsic import CancellerKind, ChannelModel, OscillatorConfig, PhaseModel, PhaseNoiseSpec, Scenario
from fdsic import degrees_to_variance
from fdsic.montecarlo import predict, run_trials

T = 21.7e-9
FC = 2.4e9
VAR = degrees_to_variance(0.717)


def osc(group, seed):
    return OscillatorConfig(FC, PhaseNoiseSpec(VAR, PhaseModel.AR1, 470e-9, seed=seed), group)


print("kind             LOs        simulated dB  predicted dB")
for kind in CancellerKind:
    for matched in (False, True):
        cancel = osc(0, 1) if matched else osc(1, 2)
        sc = Scenario(ChannelModel.single(1.0, 5 * T), osc(0, 1), cancel, osc(2, 3), canceller=kind,
                      n_samples=1 << 18)
        sim = run_trials(sc, 2, seed=1).report.analog_db
        pred = predict(sc).report().analog_db
        label = "shared" if matched else "separate"
        print(f"{kind.value:16s} {label:9s}  {sim:12.2f}  {pred:12.2f}")
print("\nThe post-mixer canceller sees the same transmit phase noise as the SI, so")
print("an exact delay match cancels it completely. With separate LOs the other")
print("architectures sit near 35 dB. A shared LO helps the pre-mixer canceller")
print("only while the SI delay is short compared with the coherence time.")
