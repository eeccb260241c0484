"""Forward map from Raman drives and normal modes to effective spin couplings.

Three Raman pairs act on the chain:

=====  ==========  ===========
pair   spin axis   mode branch
=====  ==========  ===========
I      x           transverse (X)
II     y           axial (Z)
III    z           transverse (Y)
=====  ==========  ===========

A drive may carry several beatnotes; each beatnote b addresses ion i with a
Rabi frequency ``rabi[b, i]`` and a pair of beam phases. The phases enter
only through the motional phase theta = phase_unprimed - default, which
makes the coupling

    J_ij = R sum_b sum_m Omega_bi Omega_bj cos(theta_bi - theta_bj)
           b_m^(i) b_m^(j) / (mu_b^2 - omega_m^2)

A phase of pi on both beams of an ion flips the sign of its force.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import constants

from .ion_chain import (
    CHI,
    NU_AXIAL_HZ,
    NU_TRANSVERSE_HZ,
    XI,
    YB171_MASS,
    TrapConfig,
    beam_geometry,
    lamb_dicke_matrix,
    normal_modes,
)
from .target_models import TargetHamiltonian

__all__ = [
    "PAIRS",
    "PAIR_BRANCH",
    "PAIR_AXIS",
    "DEFAULT_PHASES",
    "RESONANCE_TOL",
    "ResonanceError",
    "LaserDrive",
    "EffectiveModel",
    "ChainSetup",
    "BzShiftedBeatnotes",
    "recoil_frequency",
    "coupling_matrix",
    "effective_hamiltonian",
    "bz_detuning_shifts",
    "check_resonance",
    "mode_kernel",
]

PAIRS = ("I", "II", "III")
PAIR_BRANCH = {"I": "transverse", "II": "axial", "III": "transverse"}
PAIR_AXIS = {"I": "x", "II": "y", "III": "z"}
# (unprimed, primed) beam phases that make H_I, H_II, H_III act as sigma_x, sigma_y, sigma_z
DEFAULT_PHASES = {"I": (0.0, np.pi), "II": (0.0, 0.0), "III": (0.0, 0.0)}
DEFAULT_PAULI_WEIGHTS = (0.0, 0.5, 0.0, 0.25)
RESONANCE_TOL = 2 * np.pi * 100.0
RAMAN_WAVELENGTH = 355e-9


class ResonanceError(ValueError):
    """A beatnote sits on top of a normal mode."""


def _wrap(phi):
    return (np.asarray(phi) + np.pi) % (2 * np.pi) - np.pi


@dataclass(frozen=True)
class LaserDrive:
    """Multi-beatnote drive of one Raman pair.

    Parameters
    ----------
    pair : {'I', 'II', 'III'}
    beatnotes : (B,) angular beatnote frequencies mu_b [rad/s]
    rabi : (B, N) non-negative Rabi frequencies [rad/s]
    phase_unprimed, phase_primed : (B, N) beam phases [rad]; defaults per pair
    pauli_weights : (alpha0, alpha1, alpha2, alpha3)
    allow_bias : accept alpha0 != 0 on pair III (the bias term is not modelled)
    """

    pair: str
    beatnotes: np.ndarray
    rabi: np.ndarray
    phase_unprimed: np.ndarray = None
    phase_primed: np.ndarray = None
    pauli_weights: tuple = DEFAULT_PAULI_WEIGHTS
    allow_bias: bool = False

    def __post_init__(self):
        if self.pair not in PAIRS:
            raise ValueError(f"unknown Raman pair {self.pair!r}")
        mu = np.atleast_1d(np.asarray(self.beatnotes, dtype=float))
        rabi = np.atleast_2d(np.asarray(self.rabi, dtype=float))
        if rabi.shape[0] != mu.size:
            raise ValueError(f"rabi has {rabi.shape[0]} rows for {mu.size} beatnotes")
        if np.any(rabi < 0):
            raise ValueError("Rabi frequencies must be non-negative; encode signs in the phases")
        p0, p1 = DEFAULT_PHASES[self.pair]
        ph = np.full(rabi.shape, p0) if self.phase_unprimed is None else np.broadcast_to(
            np.asarray(self.phase_unprimed, dtype=float), rabi.shape).copy()
        php = np.full(rabi.shape, p1) if self.phase_primed is None else np.broadcast_to(
            np.asarray(self.phase_primed, dtype=float), rabi.shape).copy()
        d, dp = ph - p0, php - p1
        if np.any(np.abs(_wrap(d + dp)) > 1e-9):
            raise ValueError(
                f"pair {self.pair}: phase offsets must be opposite on the two beams "
                "(a common offset rotates the spin axis)"
            )
        w = tuple(float(v) for v in self.pauli_weights)
        if len(w) != 4:
            raise ValueError("pauli_weights needs four entries")
        if self.pair in ("I", "II") and w[2] != 0:
            raise ValueError("alpha2 != 0 rotates the spin axis of pairs I and II")
        if self.pair == "III" and w[0] != 0 and not self.allow_bias:
            raise ValueError("alpha0 != 0 adds a bias sigma_z drive; set allow_bias to override")
        for name, val in (("beatnotes", mu), ("rabi", rabi), ("phase_unprimed", ph),
                          ("phase_primed", php)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "pauli_weights", w)

    @property
    def n_ions(self):
        return self.rabi.shape[1]

    @property
    def n_beatnotes(self):
        return self.beatnotes.size

    @property
    def force_scale(self):
        """Pauli-weight factor, 1 for the default weights."""
        a0, a1, a2, a3 = self.pauli_weights
        return 2 * a1 if self.pair != "III" else 4 * a3

    @property
    def motional_phase(self):
        return _wrap(self.phase_unprimed - DEFAULT_PHASES[self.pair][0])

    @property
    def amplitudes(self):
        """Complex force amplitudes ``force_scale * rabi * exp(i theta)``, shape (B, N)."""
        return self.force_scale * self.rabi * np.exp(1j * self.motional_phase)

    @property
    def signed_rabi(self):
        """Real amplitudes ``rabi * cos(theta)`` (exact when every theta is 0 or pi)."""
        return self.force_scale * self.rabi * np.cos(self.motional_phase)

    @classmethod
    def from_signed(cls, pair, beatnotes, amplitudes, **kw):
        """Build a drive from real signed amplitudes; negative entries get a pi phase."""
        a = np.atleast_2d(np.asarray(amplitudes, dtype=float))
        flip = np.where(a < 0, np.pi, 0.0)
        p0, p1 = DEFAULT_PHASES[pair]
        return cls(pair, beatnotes, np.abs(a), p0 + flip, p1 + flip, **kw)

    @classmethod
    def zero(cls, pair, n_ions, beatnote):
        return cls(pair, [beatnote], np.zeros((1, n_ions)))

    def with_rabi(self, rabi):
        return LaserDrive(self.pair, self.beatnotes, rabi, self.phase_unprimed,
                          self.phase_primed, self.pauli_weights, self.allow_bias)

    def to_dict(self):
        return {
            "schema_version": 1,
            "pair": self.pair,
            "beatnotes_hz": (self.beatnotes / (2 * np.pi)).tolist(),
            "rabi_khz": (self.rabi / (2 * np.pi * 1e3)).tolist(),
            "phases": {
                "unprimed": self.phase_unprimed.tolist(),
                "primed": self.phase_primed.tolist(),
            },
            "pauli_weights": list(self.pauli_weights),
        }

    @classmethod
    def from_dict(cls, d):
        for key in ("pair", "beatnotes_hz", "rabi_khz"):
            if key not in d:
                raise KeyError(f"drive document lacks {key!r}")
        phases = d.get("phases", {})
        return cls(
            d["pair"],
            2 * np.pi * np.asarray(d["beatnotes_hz"], dtype=float),
            2 * np.pi * 1e3 * np.asarray(d["rabi_khz"], dtype=float),
            phases.get("unprimed"),
            phases.get("primed"),
            tuple(d.get("pauli_weights", DEFAULT_PAULI_WEIGHTS)),
            bool(d.get("allow_bias", False)),
        )

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text


@dataclass(frozen=True)
class EffectiveModel(TargetHamiltonian):
    """Engineered Heisenberg model in rad/s, with the drives that produced it."""

    provenance: dict = field(default_factory=dict, compare=False)

    def in_units(self, energy_unit):
        """TargetHamiltonian with every entry divided by ``energy_unit`` [rad/s]."""
        return TargetHamiltonian(self.jxx / energy_unit, self.jyy / energy_unit,
                                 self.jzz / energy_unit, self.bz / energy_unit,
                                 self.bx / energy_unit, self.label)


def recoil_frequency(delta_k, mass):
    """R = hbar dk^2 / (2 M) in rad/s."""
    if not mass > 0:
        raise ValueError("mass must be positive")
    return constants.hbar * np.asarray(delta_k, dtype=float) ** 2 / (2 * mass)


def _check_branch(drive, modes):
    if modes.branch != PAIR_BRANCH[drive.pair]:
        raise ValueError(
            f"pair {drive.pair} drives {PAIR_BRANCH[drive.pair]} modes, got {modes.branch}"
        )
    if modes.n_modes != drive.n_ions:
        raise ValueError(f"drive addresses {drive.n_ions} ions but modes describe {modes.n_modes}")


def check_resonance(drive, modes, tol=RESONANCE_TOL):
    gap = np.abs(drive.beatnotes[:, None] - modes.frequencies[None, :])
    b, m = np.unravel_index(np.argmin(gap), gap.shape)
    if gap[b, m] < tol:
        raise ResonanceError(
            f"pair {drive.pair} beatnote {b + 1} is {gap[b, m] / (2 * np.pi):.3g} Hz from "
            f"{modes.branch} mode {m + 1}; the coupling diverges"
        )


def coupling_matrix(drive, modes, recoil, tol=RESONANCE_TOL):
    """Effective spin-spin coupling matrix (rad/s) of one Raman pair."""
    _check_branch(drive, modes)
    check_resonance(drive, modes, tol)
    a = drive.amplitudes
    b = modes.eigenvectors
    w = modes.frequencies
    inv = 1.0 / (drive.beatnotes[:, None] ** 2 - w[None, :] ** 2)  # (B, M)
    # K_b[i, j] = sum_m b_mi b_mj / (mu_b^2 - w_m^2)
    kern = np.einsum("bm,mi,mj->bij", inv, b, b)
    jmat = recoil * np.einsum("bi,bj,bij->ij", a, a.conj(), kern).real
    jmat = 0.5 * (jmat + jmat.T)
    np.fill_diagonal(jmat, 0.0)
    return jmat


def mode_kernel(modes, beatnotes):
    """K[b, i, j] = sum_m b_m^(i) b_m^(j) / (mu_b^2 - omega_m^2)."""
    inv = 1.0 / (np.asarray(beatnotes)[:, None] ** 2 - modes.frequencies[None, :] ** 2)
    return np.einsum("bm,mi,mj->bij", inv, modes.eigenvectors, modes.eigenvectors)


def effective_hamiltonian(drives, modes, bz, recoils, tol=RESONANCE_TOL):
    """Assemble Jxx, Jyy, Jzz and Bz into an :class:`EffectiveModel`.

    ``drives`` maps pair label to LaserDrive (missing pairs are off),
    ``modes`` maps branch to NormalModeSet and ``recoils`` pair to R [rad/s].
    """
    n = modes["transverse"].n_modes
    mats = {}
    for pair in PAIRS:
        drive = drives.get(pair)
        if drive is None:
            mats[pair] = np.zeros((n, n))
        else:
            mats[pair] = coupling_matrix(drive, modes[PAIR_BRANCH[pair]], recoils[pair], tol)
    bz = np.zeros(n) if bz is None else np.asarray(bz, dtype=float)
    prov = {p: d.to_dict() for p, d in drives.items() if d is not None}
    return EffectiveModel(mats["I"], mats["II"], mats["III"], bz, label="effective",
                          provenance=prov)


@dataclass(frozen=True)
class BzShiftedBeatnotes:
    """Per-ion beatnotes after the field shift, shape (B, N) each.

    ``unprimed`` replaces mu in the exp(+i mu t) beam term, ``primed`` in the
    exp(-i mu t) term.
    """

    pair: str
    unprimed: np.ndarray
    primed: np.ndarray


def bz_detuning_shifts(drive, bz, warn_ratio=0.1, modes=None):
    """Field B_z^(i) realised by shifting the two beam frequencies by +-B_z^(i)."""
    if drive.pair == "III":
        raise ValueError("pair III beatnotes stay unchanged under the field shift")
    bz = np.asarray(bz, dtype=float)
    if bz.shape != (drive.n_ions,):
        raise ValueError("bz must have one entry per ion")
    if modes is not None:
        gap = np.min(np.abs(drive.beatnotes[:, None] - modes.frequencies[None, :]))
        if np.max(np.abs(bz)) > warn_ratio * gap:
            warnings.warn("B_z is not small against the beatnote detuning", stacklevel=2)
    mu = drive.beatnotes[:, None]
    return BzShiftedBeatnotes(drive.pair, mu + bz[None, :], mu - bz[None, :])


@dataclass(frozen=True)
class ChainSetup:
    """Trap, both mode branches and per-pair recoil / Lamb-Dicke data."""

    trap: TrapConfig
    modes: dict
    recoils: dict
    eta: dict
    delta_k: dict

    @classmethod
    def from_trap(cls, trap, wavelength=RAMAN_WAVELENGTH, xi=XI, chi=CHI, modes=None):
        geom = beam_geometry(xi, chi, 2 * np.pi / wavelength)
        if modes is None:
            modes = {b: normal_modes(trap, b) for b in ("transverse", "axial")}
        dk = {p: geom.magnitude(p) for p in PAIRS}
        rec = {p: float(recoil_frequency(dk[p], trap.ion_mass)) for p in PAIRS}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            eta = {p: lamb_dicke_matrix(modes[PAIR_BRANCH[p]], dk[p], trap.ion_mass)
                   for p in PAIRS}
        return cls(trap, dict(modes), rec, eta, dk)

    @classmethod
    def default(cls, n_ions, **kw):
        """Trap with the standard 171Yb+ frequencies (4.1351 MHz, 0.713 MHz)."""
        return cls.from_trap(TrapConfig(n_ions, NU_TRANSVERSE_HZ, NU_AXIAL_HZ, YB171_MASS), **kw)

    @property
    def n_ions(self):
        return self.trap.n_ions

    def modes_for(self, pair):
        return self.modes[PAIR_BRANCH[pair]]

    def coupling(self, drive, tol=RESONANCE_TOL):
        return coupling_matrix(drive, self.modes_for(drive.pair), self.recoils[drive.pair], tol)

    def effective_model(self, drives, bz=None, tol=RESONANCE_TOL):
        return effective_hamiltonian(drives, self.modes, bz, self.recoils, tol)
