"""
Normal modes of a linear 171Yb+ chain
=====================================

Equilibrium positions, mode frequencies and Lamb-Dicke matrices for the
default trap (4.1351 MHz transverse, 0.713 MHz axial).
"""

import numpy as np

from ionlgt.coupling import ChainSetup
from ionlgt.ion_chain import equilibrium_positions

###############################################################################
# Four ions. Frequencies are sorted from high to low, so the transverse
# centre-of-mass mode comes first and the axial one last.
setup = ChainSetup.default(4)
print("positions [um]:", np.round(equilibrium_positions(setup.trap) * 1e6, 3))
for branch, m in setup.modes.items():
    print(f"{branch:>10s} [MHz]:", np.round(m.frequencies / 2 / np.pi / 1e6, 5))

###############################################################################
# The COM eigenvector has equal participation 1/sqrt(N) on every ion.
b = setup.modes["transverse"].eigenvectors
print("COM participation:", np.round(b[0], 6))
print("orthonormality error:", np.abs(b @ b.T - np.eye(4)).max())

###############################################################################
# Lamb-Dicke parameters per Raman pair (rows are modes, columns ions).
for pair in ("I", "II", "III"):
    print(pair, np.round(setup.eta[pair][0], 4))

###############################################################################
# Eight ions: the axial spectrum spreads out while the transverse one
# compresses below the COM mode.
setup8 = ChainSetup.default(8)
for branch, m in setup8.modes.items():
    print(f"N=8 {branch:>10s} [MHz]:", np.round(m.frequencies / 2 / np.pi / 1e6, 4))
