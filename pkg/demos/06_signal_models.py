"""Abstracted signal models: more antennas add phase noise, more subcarriers do not.

With M transmit antennas each with its own oscillator, the phase-noise
residuals add, so the residual grows by 10 log10(M) dB. Splitting one
transmitter's power over K subcarriers leaves the total phase-noise residual
unchanged, while the thermal noise grows with the K receive bins.
"""

from fdsic import db, degrees_to_variance, power
from fdsic.analytic import Mimo, Narrowband, Wideband, signal_model_received

T = 21.7e-9
N = 1 << 19
BETA = 2 * degrees_to_variance(0.717)

siso = signal_model_received(Narrowband(), BETA, p_si=1.0, h_si=0.7, n=N, sample_period_s=T, seed=1)
for m in (2, 4):
    mimo = signal_model_received(Mimo(m, 1), BETA, p_si=[1.0] * m, h_si=[0.7] * m, n=N, sample_period_s=T, seed=m)
    print(f"MIMO M={m}: residual {db(power(mimo[0]) / power(siso[0])):+.2f} dB relative to one antenna")
for k in (4, 16):
    wb = signal_model_received(Wideband(k), BETA, p_si=[1.0 / k] * k, h_si=[0.7] * k, n=N, sample_period_s=T,
                               seed=10 + k)
    print(f"Wideband K={k}: total residual {db(sum(power(b) for b in wb) / power(siso[0])):+.2f} dB")
