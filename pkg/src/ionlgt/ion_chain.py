"""Linear ion-chain statics and normal modes.

Equilibrium positions of N ions in a linear trap, the transverse and axial
normal-mode spectra about that equilibrium, Lamb-Dicke matrices and the
Raman-beam geometry of the individual/global beam arrangement.

All frequencies are angular (rad/s) unless a name ends in ``_hz``.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import constants

__all__ = [
    "AMU",
    "YB171_MASS",
    "COULOMB_CONSTANT",
    "TrapConfig",
    "NormalModeSet",
    "BeamGeometry",
    "ChainConvergenceError",
    "UnstableChainError",
    "equilibrium_positions",
    "normal_modes",
    "lamb_dicke_matrix",
    "beam_geometry",
    "load_trap_config",
    "load_mode_frequencies",
]

AMU = constants.physical_constants["atomic mass constant"][0]
YB171_MASS = 170.93632578 * AMU
COULOMB_CONSTANT = constants.e**2 / (4 * np.pi * constants.epsilon_0)

# default 171Yb+ trap frequencies
NU_TRANSVERSE_HZ = 4.1351e6
NU_AXIAL_HZ = 0.713e6
XI = 0.6960
CHI = 0.1767


class ChainConvergenceError(RuntimeError):
    """Newton solve for the equilibrium did not converge."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class UnstableChainError(ValueError):
    """A normal mode has a non-positive squared frequency."""


@dataclass(frozen=True)
class TrapConfig:
    n_ions: int
    nu_transverse: float  # Hz
    nu_axial: float  # Hz
    ion_mass: float = YB171_MASS  # kg
    chain_model: str = "harmonic"
    spacing: float | None = None  # m, equispaced model only

    def __post_init__(self):
        if int(self.n_ions) != self.n_ions or self.n_ions < 1:
            raise ValueError(f"n_ions must be a positive integer, got {self.n_ions}")
        if not self.nu_transverse > self.nu_axial > 0:
            raise ValueError(
                "linear chain requires nu_transverse > nu_axial > 0, got "
                f"{self.nu_transverse} and {self.nu_axial}"
            )
        if not self.ion_mass > 0:
            raise ValueError("ion_mass must be positive")
        if self.chain_model not in ("harmonic", "equispaced"):
            raise ValueError(f"unknown chain_model {self.chain_model!r}")
        if self.chain_model == "equispaced" and not (self.spacing and self.spacing > 0):
            raise ValueError("equispaced chain_model needs a positive spacing")

    @property
    def omega_transverse(self):
        return 2 * np.pi * self.nu_transverse

    @property
    def omega_axial(self):
        return 2 * np.pi * self.nu_axial

    @property
    def length_scale(self):
        """Characteristic length (e^2 / 4 pi eps0 M w_z^2)^(1/3) in metres."""
        return (COULOMB_CONSTANT / (self.ion_mass * self.omega_axial**2)) ** (1 / 3)

    @classmethod
    def from_dict(cls, d):
        model = d.get("chain_model", "harmonic")
        spacing = d.get("spacing_um")
        return cls(
            n_ions=int(d["n_ions"]),
            nu_transverse=float(d["nu_transverse_hz"]),
            nu_axial=float(d["nu_axial_hz"]),
            ion_mass=float(d.get("ion_mass_amu", YB171_MASS / AMU)) * AMU,
            chain_model=model,
            spacing=None if spacing is None else float(spacing) * 1e-6,
        )

    def to_dict(self):
        d = {
            "n_ions": self.n_ions,
            "nu_transverse_hz": self.nu_transverse,
            "nu_axial_hz": self.nu_axial,
            "ion_mass_amu": self.ion_mass / AMU,
            "chain_model": self.chain_model,
        }
        if self.spacing is not None:
            d["spacing_um"] = self.spacing * 1e6
        return d


def load_trap_config(path):
    """Read a TrapConfig from a JSON document."""
    with open(path) as fh:
        return TrapConfig.from_dict(json.load(fh))


@dataclass(frozen=True)
class NormalModeSet:
    """Normal modes of one motional branch.

    ``frequencies`` are angular and sorted from highest to lowest.
    ``eigenvectors[m, i]`` is the participation b_m^(i) of ion i in mode m.
    """

    branch: str
    frequencies: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        if self.branch not in ("transverse", "axial"):
            raise ValueError(f"unknown branch {self.branch!r}")
        w = np.asarray(self.frequencies, dtype=float)
        b = np.asarray(self.eigenvectors, dtype=float)
        if b.shape != (w.size, w.size):
            raise ValueError("eigenvector matrix must be N x N")
        if np.any(w <= 0):
            raise ValueError("mode frequencies must be positive")
        if np.any(np.diff(w) > 0):
            raise ValueError("mode frequencies must be sorted in descending order")
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "eigenvectors", b)

    @property
    def n_modes(self):
        return self.frequencies.size

    @property
    def com_index(self):
        """Index of the centre-of-mass mode (0 transverse, N-1 axial)."""
        return 0 if self.branch == "transverse" else self.n_modes - 1

    def to_csv(self, path_or_buffer=None):
        n = self.n_modes
        lines = ["frequency_hz," + ",".join(f"b_{i + 1}" for i in range(n))]
        for w, row in zip(self.frequencies, self.eigenvectors):
            vals = [w / (2 * np.pi), *row]
            lines.append(",".join(f"{v:.17g}" for v in vals))
        text = "\n".join(lines) + "\n"
        if path_or_buffer is None:
            return text
        if hasattr(path_or_buffer, "write"):
            path_or_buffer.write(text)
        else:
            Path(path_or_buffer).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path, branch):
        rows = np.loadtxt(path, delimiter=",", skiprows=1, comments="#", ndmin=2)
        return cls(branch, 2 * np.pi * rows[:, 0], rows[:, 1:])


def _coulomb_offdiag(z):
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, np.inf)
    return 1.0 / d**3


def _harmonic_positions(n, tol=1e-13, max_iter=200):
    """Dimensionless equilibrium u of sum u_i^2/2 + sum_{i<j} 1/|u_i-u_j|."""
    if n == 1:
        return np.zeros(1)
    # equispaced start with the large-N spacing estimate
    u = np.linspace(-1, 1, n) * (1.0 * n ** 0.56)
    for _ in range(max_iter):
        diff = u[:, None] - u[None, :]
        np.fill_diagonal(diff, np.inf)
        grad = u - np.sum(np.sign(diff) / diff**2, axis=1)
        inv3 = 1.0 / np.abs(diff) ** 3
        hess = -2 * inv3
        np.fill_diagonal(hess, 1 + 2 * inv3.sum(axis=1))
        step = np.linalg.solve(hess, grad)
        # damping keeps the ordering intact
        gaps = np.diff(u)
        dgap = np.diff(step)
        shrink = dgap > 0.5 * gaps
        lam = 1.0
        if np.any(shrink):
            lam = min(1.0, float(np.min(0.5 * gaps[shrink] / dgap[shrink])))
        u = u - lam * step
        if np.max(np.abs(grad)) < tol and lam == 1.0:
            break
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, np.inf)
    resid = float(np.max(np.abs(u - np.sum(np.sign(diff) / diff**2, axis=1))))
    if resid > 1e-10:
        raise ChainConvergenceError("equilibrium solve did not converge", resid)
    u = np.sort(u)
    return 0.5 * (u - u[::-1])  # enforce exact antisymmetry


def equilibrium_positions(trap):
    """Axial equilibrium positions in metres, sorted ascending."""
    n = trap.n_ions
    if trap.chain_model == "equispaced":
        return (np.arange(n) - (n - 1) / 2) * trap.spacing
    return _harmonic_positions(n) * trap.length_scale


def normal_modes(trap, branch):
    """Normal modes of the chain about equilibrium for one branch.

    The external curvature is M w^2 at every ion for both chain models, so
    the centre-of-mass mode sits exactly at the trap frequency.
    """
    z = equilibrium_positions(trap)
    m = trap.ion_mass
    c = COULOMB_CONSTANT * _coulomb_offdiag(z)
    if branch == "axial":
        k = -2 * c
        np.fill_diagonal(k, m * trap.omega_axial**2 + 2 * c.sum(axis=1))
    elif branch == "transverse":
        k = c.copy()
        np.fill_diagonal(k, m * trap.omega_transverse**2 - c.sum(axis=1))
    else:
        raise ValueError(f"unknown branch {branch!r}")
    evals, evecs = np.linalg.eigh(k / m)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    bad = np.nonzero(evals <= 0)[0]
    if bad.size:
        raise UnstableChainError(
            f"unstable chain: {branch} mode {int(bad[0]) + 1} has w^2 = {evals[bad[0]]:.4g}"
        )
    vecs = evecs.T.copy()
    for row in vecs:
        # sign convention: first non-negligible component positive
        k0 = np.argmax(np.abs(row) > 1e-8)
        if row[k0] < 0:
            row *= -1
    return NormalModeSet(branch, np.sqrt(evals), vecs)


def load_mode_frequencies(path, branch, template):
    """Replace the frequencies of ``template`` with values read from a CSV.

    The file holds one ``frequency_hz`` per row (extra columns ignored), e.g.
    tabulated mode frequencies. Eigenvectors are taken from ``template``.
    """
    rows = np.loadtxt(path, delimiter=",", skiprows=1, comments="#", ndmin=2)
    freqs = 2 * np.pi * rows[:, 0]
    if freqs.size != template.n_modes:
        raise ValueError("mode count in file does not match the template")
    return NormalModeSet(branch, np.sort(freqs)[::-1], template.eigenvectors)


def lamb_dicke_matrix(modes, delta_k, mass, warn_above=0.2):
    """eta[m, i] = sqrt(hbar dk^2 / (2 M w_m)) * b_m^(i)."""
    if not delta_k > 0:
        raise ValueError("delta_k must be positive")
    w = modes.frequencies
    if np.any(w == 0):
        raise ZeroDivisionError("zero mode frequency")
    scale = np.sqrt(constants.hbar * delta_k**2 / (2 * mass * w))
    eta = scale[:, None] * modes.eigenvectors
    if np.max(np.abs(eta)) > warn_above:
        warnings.warn(
            f"Lamb-Dicke parameter {np.max(np.abs(eta)):.3f} exceeds {warn_above}",
            stacklevel=2,
        )
    return eta


@dataclass(frozen=True)
class BeamGeometry:
    xi: float
    chi: float
    carrier_wavenumber: float
    delta_k: dict = field(default_factory=dict)  # pair -> 3-vector [rad/m]
    angles_deg: dict = field(default_factory=dict)  # pair -> angle to individual beam

    def magnitude(self, pair):
        return float(np.linalg.norm(self.delta_k[pair]))


def beam_geometry(xi, chi, carrier_wavenumber, tol=1e-4):
    """Wave-vector differences between the individual beams and globals I, II, III.

    Individual beams run along (xi, xi, chi); globals along (-xi, xi, chi),
    (xi, xi, -chi) and (xi, -xi, chi). Inputs within ``tol`` of the unit
    constraint (e.g. values quoted to four digits) are renormalised.
    """
    norm2 = 2 * xi**2 + chi**2
    if abs(norm2 - 1) > tol:
        raise ValueError(f"beam direction not normalised: 2 xi^2 + chi^2 = {norm2}")
    xi, chi = xi / math.sqrt(norm2), chi / math.sqrt(norm2)
    if xi == 0:
        raise ValueError("xi = 0 leaves no transverse wave-vector difference")
    k = carrier_wavenumber
    ind = np.array([xi, xi, chi])
    glob = {
        "I": np.array([-xi, xi, chi]),
        "II": np.array([xi, xi, -chi]),
        "III": np.array([xi, -xi, chi]),
    }
    dk = {p: k * (ind - g) for p, g in glob.items()}
    angles = {p: math.degrees(math.acos(float(np.clip(ind @ g, -1, 1)))) for p, g in glob.items()}
    return BeamGeometry(xi, chi, k, dk, angles)
