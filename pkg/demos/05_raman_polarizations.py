"""
Raman polarizations for a pure sigma_z force
============================================

At Delta = (sqrt 2 - 1) omega_F the balanced polarizations cancel the
differential Stark shift and give equal and opposite forces on the two
qubit levels.
"""

import numpy as np

from ionlgt.raman import (RamanSetting, balanced_polarizations, emission_minimum_detuning,
                          magic_detuning, minimize_emission, raman_rabi_rates,
                          spontaneous_emission_rate, stark_shift_difference)

omega_f = 1.0  # detunings in units of the fine-structure splitting
blue, red = balanced_polarizations()
print("blue (s-, pi, s+):", np.round(np.real(blue.components), 4))
print("red  (s-, pi, s+):", np.round(np.real(red.components), 4))

setting = RamanSetting.magic(omega_f)
rates = raman_rabi_rates(red, blue, setting, method="sum")
print("Omega(up), Omega(down):", rates.up, rates.down)
print("imbalance:", rates.imbalance)
print("Stark-shift difference:", stark_shift_difference(red, blue, setting))

###############################################################################
# The scattering rate has its minimum near, but not at, the force-balancing
# detuning.
for d in np.linspace(0.3, 0.6, 7):
    r = spontaneous_emission_rate(red, blue, RamanSetting(d, omega_f))
    print(f"Delta = {d:.2f} omega_F: rate {r:.4f}")
print("magic detuning:   ", magic_detuning(omega_f))
print("numeric minimum:  ", minimize_emission(red, blue, omega_f))
print("analytic minimum: ", emission_minimum_detuning(omega_f))
