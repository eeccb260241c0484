"""Target spin Hamiltonians for lattice gauge theories.

Every model is expressed in the generic form

    H = sum_{i<j} [Jxx_ij X_i X_j + Jyy_ij Y_i Y_j + Jzz_ij Z_i Z_j]
        - 1/2 sum_i Bz_i Z_i - sum_i Bx_i X_i

with ions (spins) indexed from 0 in code and from 1 in the physics.
Energies are dimensionless; for the Schwinger model the unit is a g^2 / 2.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path

import numpy as np

__all__ = [
    "SchwingerParams",
    "TargetHamiltonian",
    "Lattice2DMap",
    "schwinger_hamiltonian",
    "schwinger_direct",
    "xy_2d_hamiltonian",
    "z2_dual_ising_hamiltonian",
    "pauli_operator",
    "dense_operator",
    "total_sz",
]

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class SchwingerParams:
    n_sites: int
    x: float
    mu: float
    epsilon0: float = 0.0

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("n_sites must be at least 2")
        if self.n_sites % 2:
            raise ValueError(f"n_sites must be even for the staggered vacuum, got {self.n_sites}")
        if self.x < 0:
            raise ValueError("hopping x must be non-negative")


@dataclass(frozen=True)
class TargetHamiltonian:
    """Coupling matrices and fields of a Heisenberg-type spin Hamiltonian."""

    jxx: np.ndarray
    jyy: np.ndarray
    jzz: np.ndarray
    bz: np.ndarray
    bx: np.ndarray = None
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = len(self.bz)
        mats = {}
        for name in ("jxx", "jyy", "jzz"):
            m = np.array(getattr(self, name), dtype=float)
            if m.shape != (n, n):
                raise ValueError(f"{name} must be {n}x{n}")
            if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, np.abs(m).max())):
                raise ValueError(f"{name} must be symmetric")
            if np.any(np.diag(m) != 0):
                raise ValueError(f"{name} must have a zero diagonal")
            mats[name] = 0.5 * (m + m.T)
        for name, m in mats.items():
            object.__setattr__(self, name, m)
        object.__setattr__(self, "bz", np.array(self.bz, dtype=float))
        bx = np.zeros(n) if self.bx is None else np.array(self.bx, dtype=float)
        object.__setattr__(self, "bx", bx)

    @property
    def n_spins(self):
        return self.bz.size

    def coupling(self, axis):
        return {"x": self.jxx, "y": self.jyy, "z": self.jzz}[axis]

    def scaled(self, factor):
        """All couplings and fields multiplied by ``factor``."""
        return TargetHamiltonian(
            self.jxx * factor, self.jyy * factor, self.jzz * factor,
            self.bz * factor, self.bx * factor, self.label, dict(self.meta),
        )

    def replace(self, **kw):
        d = dict(jxx=self.jxx, jyy=self.jyy, jzz=self.jzz, bz=self.bz, bx=self.bx,
                 label=self.label, meta=dict(self.meta))
        d.update(kw)
        return TargetHamiltonian(**d)

    def to_dict(self):
        return {
            "schema_version": 1,
            "label": self.label,
            "n_spins": self.n_spins,
            "jxx": self.jxx.tolist(),
            "jyy": self.jyy.tolist(),
            "jzz": self.jzz.tolist(),
            "bz": self.bz.tolist(),
            "bx": self.bx.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["jxx"]), np.array(d["jyy"]), np.array(d["jzz"]),
                   np.array(d["bz"]), np.array(d.get("bx", np.zeros(len(d["bz"])))),
                   d.get("label", ""))

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_csv(self, directory, stem="target"):
        """One CSV per matrix plus one for the field vectors."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for name in ("jxx", "jyy", "jzz"):
            p = directory / f"{stem}_{name}.csv"
            np.savetxt(p, getattr(self, name), delimiter=",", fmt="%.17g")
            paths.append(p)
        p = directory / f"{stem}_fields.csv"
        rows = np.column_stack([np.arange(1, self.n_spins + 1), self.bz, self.bx])
        np.savetxt(p, rows, delimiter=",", fmt="%.17g", header="ion,bz,bx", comments="")
        paths.append(p)
        return paths

    def matrix(self):
        """Dense 2^N x 2^N operator."""
        return dense_operator(self)


# --- dense operator helpers -------------------------------------------------

def pauli_operator(n, ops):
    """Kronecker product with ``ops`` = {site: 'X'|'Y'|'Z'}; site 0 is the leftmost factor."""
    return reduce(np.kron, [_PAULI[ops.get(k, "I")] for k in range(n)])


def _diag_z(n, k):
    # sigma_z eigenvalue of site k for every basis index (site 0 = most significant bit)
    idx = np.arange(2**n)
    return 1 - 2 * ((idx >> (n - 1 - k)) & 1)


def total_sz(n):
    return np.diag(sum(_diag_z(n, k) for k in range(n)).astype(complex))


def dense_operator(h):
    n = h.n_spins
    if n > 14:
        raise ValueError(f"dense operator for {n} spins exceeds the 14-spin limit; reduce N")
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    zs = [_diag_z(n, k) for k in range(n)]
    diag = np.zeros(dim)
    for i in range(n):
        diag -= 0.5 * h.bz[i] * zs[i]
        for j in range(i + 1, n):
            if h.jzz[i, j]:
                diag += h.jzz[i, j] * zs[i] * zs[j]
            if h.jxx[i, j] or h.jyy[i, j]:
                out += h.jxx[i, j] * pauli_operator(n, {i: "X", j: "X"})
                out += h.jyy[i, j] * pauli_operator(n, {i: "Y", j: "Y"})
        if h.bx[i]:
            out -= h.bx[i] * pauli_operator(n, {i: "X"})
    out[np.diag_indices(dim)] += diag
    return out


# --- Schwinger model ---------------------------------------------------------

def schwinger_hamiltonian(p):
    """Pure-spin lattice Schwinger model split into xx, yy, zz and z parts.

    The identity offset produced by eliminating the gauge field is dropped.
    """
    n = p.n_sites
    hop = np.zeros((n, n))
    for k in range(n - 1):
        hop[k, k + 1] = hop[k + 1, k] = p.x / 2
    jzz = np.zeros((n, n))
    # 1-indexed: J_{m,n} = (N - n)/2 for m < n <= N-1
    for a in range(n):
        for b in range(a + 1, n - 1):
            jzz[a, b] = jzz[b, a] = (n - (b + 1)) / 2
    sites = np.arange(1, n + 1)
    stagger = (-1.0) ** sites
    # coefficient of Z_l: mu/2 (-1)^l - 1/2 #{odd k : l <= k <= N-1} - eps0 #{k : l <= k <= N-1}
    odd_count = np.array([sum(1 for k in range(l, n) if k % 2) for l in sites])
    link_count = n - sites
    coeff = 0.5 * p.mu * stagger - 0.5 * odd_count + p.epsilon0 * link_count
    bz = -2 * coeff
    return TargetHamiltonian(hop, hop.copy(), jzz, bz, label="schwinger",
                             meta={"n_sites": n, "x": p.x, "mu": p.mu, "epsilon0": p.epsilon0})


def schwinger_direct(p):
    """Dense 2^N operator of the gauge-eliminated Schwinger Hamiltonian.

    Built literally from hopping terms and the squared cumulative electric
    field, independently of :func:`schwinger_hamiltonian`; it differs from
    that split form only by a multiple of the identity.
    """
    n = p.n_sites
    if n > 14:
        raise ValueError("dense operator limited to 14 sites")
    dim = 2**n
    sp = np.array([[0, 1], [0, 0]], dtype=complex)
    sm = sp.T.copy()
    eye = np.eye(2, dtype=complex)

    def embed(ops):
        return reduce(np.kron, [ops.get(k, eye) for k in range(n)])

    h = np.zeros((dim, dim), dtype=complex)
    for k in range(n - 1):
        h += p.x * (embed({k: sp, k + 1: sm}) + embed({k + 1: sp, k: sm}))
    zs = [_diag_z(n, k) for k in range(n)]
    diag = np.zeros(dim)
    field_ = np.full(dim, float(p.epsilon0))
    for k in range(n - 1):
        site = k + 1
        field_ = field_ + 0.5 * (zs[k] + (-1) ** site)
        diag += field_**2
    for k in range(n):
        diag += 0.5 * p.mu * (-1) ** (k + 1) * zs[k]
    h[np.diag_indices(dim)] += diag
    return h


# --- 2D models ---------------------------------------------------------------

@dataclass(frozen=True)
class Lattice2DMap:
    """Bijection between sites (x, y) of an Lx x Ly lattice and ion indices.

    ``ordering`` is 'row-major' (ion = y * Lx + x) or 'snake' (alternate rows
    reversed). Ion indices here are 0-based.
    """

    lx: int
    ly: int
    ordering: str = "row-major"

    def __post_init__(self):
        if self.lx < 1 or self.ly < 1:
            raise ValueError("lattice extents must be at least 1")
        if self.ordering not in ("row-major", "snake"):
            raise ValueError(f"unknown ordering {self.ordering!r}")

    @property
    def n_sites(self):
        return self.lx * self.ly

    def ion(self, x, y):
        if not (0 <= x < self.lx and 0 <= y < self.ly):
            raise IndexError(f"site ({x}, {y}) outside the lattice")
        if self.ordering == "snake" and y % 2:
            x = self.lx - 1 - x
        return y * self.lx + x

    def site(self, ion):
        if not 0 <= ion < self.n_sites:
            raise IndexError(f"ion {ion} outside the lattice")
        y, x = divmod(ion, self.lx)
        if self.ordering == "snake" and y % 2:
            x = self.lx - 1 - x
        return x, y

    def bonds(self):
        """Nearest-neighbour ion pairs (i < j), open boundaries."""
        out = []
        for y in range(self.ly):
            for x in range(self.lx):
                for dx, dy in ((1, 0), (0, 1)):
                    if x + dx < self.lx and y + dy < self.ly:
                        i, j = self.ion(x, y), self.ion(x + dx, y + dy)
                        out.append((min(i, j), max(i, j)))
        return sorted(out)

    @classmethod
    def dual_of(cls, l_sites, ordering="row-major"):
        """Plaquette-centre lattice of an L x L site lattice."""
        if l_sites < 2:
            raise ValueError("need at least a 2 x 2 site lattice for one plaquette")
        return cls(l_sites - 1, l_sites - 1, ordering)


def _bond_matrix(lattice, value):
    n = lattice.n_sites
    m = np.zeros((n, n))
    for i, j in lattice.bonds():
        m[i, j] = m[j, i] = value
    return m


def xy_2d_hamiltonian(lattice, h=1.0):
    """XY model from the 2D Jordan-Wigner image of Chern-Simons fermions.

    h (sigma+ sigma- + h.c.) per bond equals h/2 (XX + YY).
    """
    j = _bond_matrix(lattice, h / 2)
    return TargetHamiltonian(j, j.copy(), np.zeros_like(j), np.zeros(lattice.n_sites),
                             label="xy2d", meta={"lx": lattice.lx, "ly": lattice.ly, "h": h})


def z2_dual_ising_hamiltonian(lattice, lam):
    """Transverse-field Ising model dual to pure Z2 gauge theory.

    H = -lam sum X - sum_<pq> Z_p Z_q, stored as Jzz = -1 on dual bonds and Bx = lam.
    """
    j = _bond_matrix(lattice, -1.0)
    n = lattice.n_sites
    return TargetHamiltonian(np.zeros_like(j), np.zeros_like(j), j, np.zeros(n),
                             np.full(n, float(lam)), label="z2dual",
                             meta={"lx": lattice.lx, "ly": lattice.ly, "lambda": lam})
