"""Exact state-vector dynamics of small spin Hamiltonians.

Basis states are sigma_z products with site 0 the most significant bit and
bit value 0 meaning sigma_z = +1. Times are in the inverse energy unit of
the Hamiltonian (for dimensionless Schwinger Hamiltonians, (a g^2 / 2)^-1).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .target_models import TargetHamiltonian, dense_operator

__all__ = [
    "MAX_DENSE_SPINS",
    "SpinState",
    "ObservableSeries",
    "EnsembleBand",
    "evolve_state",
    "vpa_series",
    "delta_xx",
    "ensemble_band",
    "perturbed_hopping_ensemble",
]

MAX_DENSE_SPINS = 14


@dataclass(frozen=True)
class SpinState:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).ravel()
        n = int(round(np.log2(a.size)))
        if a.size != 2**n or a.size < 2:
            raise ValueError(f"state length {a.size} is not a power of two")
        nrm = np.linalg.norm(a)
        if abs(nrm - 1) > 1e-10:
            raise ValueError(f"state is not normalised (norm {nrm})")
        object.__setattr__(self, "amplitudes", a)

    @property
    def n_spins(self):
        return int(round(np.log2(self.amplitudes.size)))

    @classmethod
    def from_spins(cls, sz):
        """Product state from sigma_z eigenvalues (+1 / -1) per site."""
        sz = np.asarray(sz)
        if not np.all(np.isin(sz, (-1, 1))):
            raise ValueError("sigma_z values must be +1 or -1")
        bits = (1 - sz) // 2
        idx = int("".join(str(int(b)) for b in bits), 2)
        a = np.zeros(2**sz.size, dtype=complex)
        a[idx] = 1
        return cls(a)

    @classmethod
    def staggered_vacuum(cls, n):
        """Zero-charge state of the staggered lattice: sigma_z = +1 on odd sites
        (1-based), -1 on even sites. Written |down up down up ...> in the
        convention where 'down' is the sigma_z = +1 level.
        """
        if n % 2:
            raise ValueError("staggered vacuum needs an even number of sites")
        return cls.from_spins([1 if (k + 1) % 2 else -1 for k in range(n)])

    @classmethod
    def named(cls, token, n):
        if token in ("staggered-vacuum", "vacuum"):
            return cls.staggered_vacuum(n)
        if token in ("all-up", "all-down"):
            return cls.from_spins(np.full(n, 1 if token == "all-up" else -1))
        raise ValueError(f"unknown state token {token!r}")

    @classmethod
    def from_file(cls, path):
        """Amplitudes from a CSV with columns re, im (one row per basis state)."""
        rows = np.loadtxt(path, delimiter=",", comments="#", ndmin=2, skiprows=1)
        return cls(rows[:, 0] + 1j * rows[:, 1])

    def overlap(self, other):
        return np.vdot(self.amplitudes, other.amplitudes)


@dataclass
class ObservableSeries:
    times: np.ndarray
    values: np.ndarray
    label: str = "vpa"
    time_unit: str = "1/energy_unit"
    meta: dict = field(default_factory=dict)

    def to_csv(self, path=None, header_lines=()):
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", self.label])
        for t, v in zip(self.times, self.values):
            w.writerow([f"{t:.17g}", f"{v:.17g}"])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _matrix(h):
    if isinstance(h, TargetHamiltonian):
        if h.n_spins > MAX_DENSE_SPINS:
            raise ValueError(
                f"{h.n_spins} spins exceed the dense limit of {MAX_DENSE_SPINS}; reduce N"
            )
        return dense_operator(h)
    m = np.asarray(h, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("Hamiltonian matrix must be square")
    if m.shape[0] > 2**MAX_DENSE_SPINS:
        raise ValueError("Hamiltonian dimension exceeds the dense limit; reduce N")
    return m


def evolve_state(h, psi0, times, method="eig", rtol=1e-12, atol=1e-13):
    """States exp(-i H t) psi0 at each time.

    ``method='eig'`` diagonalises H once (reference path); ``'ode'``
    integrates the Schroedinger equation with an adaptive 8th-order
    Runge-Kutta scheme (cross-check path).
    """
    m = _matrix(h)
    psi = psi0.amplitudes
    if psi.size != m.shape[0]:
        raise ValueError("state and Hamiltonian dimensions differ")
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if method == "eig":
        w, v = np.linalg.eigh(m)
        c = v.conj().T @ psi
        out = (v @ (np.exp(-1j * np.outer(w, t)) * c[:, None])).T
    elif method == "ode":
        if np.any(np.diff(t) < 0):
            raise ValueError("ode path needs non-decreasing times")
        if t[-1] == 0:
            out = np.tile(psi, (t.size, 1))
        else:
            sol = solve_ivp(lambda _, y: -1j * (m @ y), (0.0, t[-1]), psi, method="DOP853",
                            t_eval=t, rtol=rtol, atol=atol)
            if not sol.success:
                raise RuntimeError(sol.message)
            out = sol.y.T
    else:
        raise ValueError(f"unknown method {method!r}")
    # renormalise away round-off only
    return [SpinState(row / np.linalg.norm(row)) for row in out]


def vpa_series(psi0, states, times=None):
    """|<psi0|psi(t)>|^2 for each evolved state."""
    vals = np.array([abs(psi0.overlap(s)) ** 2 for s in states])
    t = np.arange(len(states), dtype=float) if times is None else np.asarray(times, dtype=float)
    return ObservableSeries(t, np.clip(vals, 0.0, 1.0), "vpa")


def delta_xx(h):
    """Sum of squared beyond-nearest-neighbour J^(xx) elements (i < j, j - i >= 2)."""
    j = h.jxx
    n = j.shape[0]
    return float(sum(j[a, b] ** 2 for a in range(n) for b in range(a + 2, n)))


@dataclass
class EnsembleBand:
    times: np.ndarray
    central: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    retained: list
    metrics: list
    curves: np.ndarray
    meta: dict = field(default_factory=lambda: {"central": "mean", "band": "1 sample std"})

    @property
    def width(self):
        return self.upper - self.lower

    def to_csv(self, path=None, header_lines=()):
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "central", "lower", "upper"])
        for row in zip(self.times, self.central, self.lower, self.upper):
            w.writerow([f"{v:.17g}" for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def ensemble_band(hams, threshold, psi0, times, metric=delta_xx):
    """Mean and +-1 sample-std VPA band over Hamiltonians with metric <= threshold."""
    metrics = [metric(h) for h in hams]
    keep = [k for k, v in enumerate(metrics) if v <= threshold]
    if not keep:
        raise ValueError(f"no Hamiltonian passes the filter (min metric {min(metrics):.3g})")
    t = np.asarray(times, dtype=float)
    curves = np.array([vpa_series(psi0, evolve_state(hams[k], psi0, t), t).values for k in keep])
    mean = curves.mean(axis=0)
    std = curves.std(axis=0, ddof=1) if len(keep) > 1 else np.zeros_like(mean)
    return EnsembleBand(t, mean, mean - std, mean + std, keep, metrics, curves)


def perturbed_hopping_ensemble(params, setup, detunings_hz, pair="I"):
    """Schwinger Hamiltonians whose hopping matrices come from single-detuning
    calibrations at each detuning (relative to the COM mode).

    Each calibrated J^(xx) is rescaled to nearest-neighbour value x/2 and
    used for both xx and yy; the zz couplings and fields are exact.
    """
    from .pulse_optimizer import calibrate_single_detuning
    from .target_models import schwinger_hamiltonian

    exact = schwinger_hamiltonian(params)
    modes = setup.modes_for(pair)
    com = modes.frequencies[modes.com_index]
    nn = params.x / 2
    out = []
    for det in detunings_hz:
        drive, _ = calibrate_single_detuning(1.0, modes, com + 2 * np.pi * det,
                                             setup.recoils[pair], pair)
        j = setup.coupling(drive) * nn
        out.append(exact.replace(jxx=j, jyy=j.copy(), label=f"perturbed {det:.0f} Hz",
                                 meta={"detuning_hz": float(det)}))
    return out
