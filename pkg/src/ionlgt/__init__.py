"""Analog simulation of lattice gauge theories with trapped-ion Raman drives.

Modules
-------
ion_chain       trap geometry, normal modes, Lamb-Dicke parameters
target_models   Schwinger, 2D XY and Z2 dual-Ising spin Hamiltonians
coupling        laser drives and the effective spin-spin couplings they induce
pulse_optimizer single-detuning calibration and multi-frequency fits
magnus          closed-form Magnus-expansion terms and validity checks
dynamics        exact state-vector evolution, vacuum persistence
raman           Raman polarization / detuning physics for 171Yb+
cli             command-line front end
"""

__version__ = "0.1.0"

from .ion_chain import TrapConfig, NormalModeSet, normal_modes, lamb_dicke_matrix  # noqa: E402
from .target_models import (  # noqa: E402
    SchwingerParams, TargetHamiltonian, schwinger_hamiltonian, schwinger_direct,
)
from .coupling import LaserDrive, ChainSetup, coupling_matrix, effective_hamiltonian  # noqa: E402
from .pulse_optimizer import (  # noqa: E402
    calibrate_single_detuning, fit_multifrequency, detuning_schedule, check_constraints,
    design_schwinger,
)
from .magnus import magnus_terms, extract_j_from_chi  # noqa: E402
from .dynamics import SpinState, evolve_state, vpa_series, ensemble_band  # noqa: E402
from .raman import Polarization, RamanSetting, raman_rabi_rates, wigner_3j, wigner_6j  # noqa: E402
