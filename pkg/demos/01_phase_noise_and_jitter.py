"""Phase noise: from an oscillator datasheet to a simulated phase path.

An oscillator's phase noise is usually quoted as a single-sideband spectrum
L(f) in dBc/Hz. Integrating it gives the RMS phase jitter, which sets the
variance of the phase path used everywhere else in the package.
"""

import math

from fdsic import PhaseModel, PhaseNoiseSpec, degrees_to_variance
from fdsic.phasenoise import (
    SpectrumSegment,
    empirical_autocorrelation,
    jitter_from_spectrum,
    jitter_phase_to_time,
    jitter_time_to_phase,
    sample_phase_path,
)

T = 21.7e-9
FC = 2.4e9

print("1. Jitter in time and in phase")
dt = jitter_phase_to_time(math.radians(0.717), FC)
print(f"   0.717 deg at 2.4 GHz is {dt * 1e12:.3f} ps of timing jitter")
print(f"   and 0.83 ps maps back to {math.degrees(jitter_time_to_phase(0.83e-12, FC)):.3f} deg")

print("\n2. Jitter integrated from a piecewise-flat spectrum")
segments = [SpectrumSegment(1e3, 1e5, -95.0), SpectrumSegment(1e5, 1e6, -110.0),
            SpectrumSegment(1e6, 1e7, -130.0)]
sigma = jitter_from_spectrum(segments, 1e3, 1e7)
print(f"   1 kHz .. 10 MHz gives sigma = {sigma * 1e3:.3f} mrad = {math.degrees(sigma):.3f} deg")

print("\n3. A simulated WARP-like phase path (0.717 deg, 470 ns coherence)")
spec = PhaseNoiseSpec(degrees_to_variance(0.717), PhaseModel.AR1, 470e-9, seed=1)
path = sample_phase_path(spec, 1 << 20, T, seed=1)
print(f"   target variance {spec.variance_rad2:.4e} rad^2, sample variance {path.var():.4e} rad^2")
acf = empirical_autocorrelation(path, 60)
print("   lag  empirical  model")
for d in (0, 1, 5, 20, 60):
    print(f"   {d:3d}  {acf[d]:9.4f}  {spec.correlation(d * T):.4f}")
print("\nThe phase noise decorrelates over a few hundred nanoseconds, so any canceller")
print("that compares two copies of it taken more than a few samples apart sees")
print("almost independent noise.")
