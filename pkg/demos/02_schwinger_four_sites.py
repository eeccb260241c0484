"""
Four-site Schwinger model with one beatnote per Raman pair
==========================================================

Calibrate the xx and yy hopping with a single detuning, fit the long-range
zz couplings, and compare the engineered spin model with the target.
"""

import numpy as np

from ionlgt.coupling import ChainSetup
from ionlgt.pulse_optimizer import DEFAULT_ENERGY_UNIT, check_constraints, design_schwinger
from ionlgt.target_models import SchwingerParams, schwinger_hamiltonian

params = SchwingerParams(n_sites=4, x=0.6, mu=0.1)
setup = ChainSetup.default(4)
target = schwinger_hamiltonian(params)
print("target Jzz (units of a g^2 / 2):\n", np.round(target.jzz, 4))

###############################################################################
# Couplings are mapped to rad/s with an energy unit of 2 pi x 1 kHz.
design = design_schwinger(params, setup, seed=0)
for pair, rep in design.reports.items():
    print(pair, rep.constraint_flags)

###############################################################################
# Engineered model, back in units of the target. Nearest-neighbour hopping is
# exact; the next-nearest terms are the residual contamination of a single
# beatnote.
model = design.effective_model(setup).in_units(DEFAULT_ENERGY_UNIT)
print("engineered Jxx:\n", np.round(model.jxx, 4))
print("relative contamination:", design.reports["I"].contamination)
print("Jzz error:", np.abs(model.jzz - target.jzz).max())

###############################################################################
# Validity ratios. The sideband ratios stay at the percent level.
rep = check_constraints(design.drives, setup, design.bz)
for k, v in rep.worst.items():
    print(f"{k:>12s}: {v:.4f} (threshold {rep.thresholds[k]})")
