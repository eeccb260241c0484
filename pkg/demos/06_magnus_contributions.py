"""
Second-order Magnus contributions for one ion
=============================================

Evaluate every exponent coefficient of the four-ion design on a time grid
and compare the secular zz growth with the effective coupling.
"""

import numpy as np

from ionlgt.coupling import ChainSetup
from ionlgt.magnus import PANEL_TITLES, contribution_report, extract_j_from_chi, magnus_terms
from ionlgt.pulse_optimizer import design_schwinger
from ionlgt.target_models import SchwingerParams

setup = ChainSetup.default(4)
design = design_schwinger(SchwingerParams(4, 0.6, 0.1), setup)
t = np.linspace(0, 1e-3, 201)

panels = contribution_report(design.drives, setup, design.bz, t, ion=0)
for key, series in panels.items():
    peak = max((np.abs(v).max() for v in series.values()), default=0.0)
    print(f"({key}) {PANEL_TITLES[key]:<28s} max |coefficient| = {peak:.3e}")

###############################################################################
# Im chi grows as -J t / 2; its slope recovers the coupling matrix.
mt = magnus_terms({"III": design.drives["III"]}, setup, None, t)
j, rms = extract_j_from_chi(t, mt.chi("z"))
jc = setup.coupling(design.drives["III"])
print("relative slope error:", np.abs(j - jc).max() / np.abs(jc).max())
