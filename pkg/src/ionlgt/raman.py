"""Raman-beam atomic physics for the 171Yb+ hyperfine qubit.

Angular-momentum algebra (exact rational Racah formulas), dipole matrix
elements, differential Stark shift, spontaneous emission and the two-photon
Rabi rates whose balance Omega(up) = -Omega(down) gives a pure sigma_z force.

The two excited manifolds are 2P1/2 (detuning ``Delta``) and 2P3/2
(detuning ``Delta - omega_F``). Both share the line constants ``c0`` and
``gamma``. Beam field amplitudes are set to one, so rates come out in the
units of ``c0 * gamma``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "ZEEMAN_QUADRATIC_HZ_PER_G2",
    "QUBIT_STATES",
    "wigner_3j",
    "wigner_6j",
    "wigner_3j_squared",
    "wigner_6j_squared",
    "dipole_matrix_element",
    "reduced_dipole_element",
    "Polarization",
    "RamanSetting",
    "RamanRates",
    "magic_detuning",
    "emission_minimum_detuning",
    "balanced_polarizations",
    "stark_shift_difference",
    "stark_shifts",
    "spontaneous_emission_rate",
    "spontaneous_emission_sum",
    "raman_rabi_rates",
    "minimize_emission",
    "polarization_report",
]

ZEEMAN_QUADRATIC_HZ_PER_G2 = 310.8

# (F, m_F) of the ground hyperfine levels. The labels follow the Stark and
# Rabi closed forms below, in which the isotropic F=0 level carries the
# "down" rate.
QUBIT_STATES = {"up": (1, -1), "down": (0, 0)}

_J_GROUND = Fraction(1, 2)
_I_NUC = Fraction(1, 2)


# ---------------------------------------------------------------- Wigner symbols

def _half(x):
    """Exact half-integer from int, float, or Fraction input."""
    f = Fraction(x).limit_denominator(4) if isinstance(x, float) else Fraction(x)
    if isinstance(x, float) and abs(float(f) - x) > 1e-12:
        raise ValueError(f"{x!r} is not an integer or half-integer")
    if (2 * f).denominator != 1:
        raise ValueError(f"{x!r} is not an integer or half-integer")
    return f


def _fact(x):
    if x.denominator != 1 or x < 0:
        raise ValueError("negative or fractional factorial argument")
    return math.factorial(int(x))


def _triangle(a, b, c):
    return (a + b - c >= 0 and a - b + c >= 0 and -a + b + c >= 0
            and (a + b + c).denominator == 1)


def _delta_sq(a, b, c):
    return Fraction(_fact(a + b - c) * _fact(a - b + c) * _fact(-a + b + c), _fact(a + b + c + 1))


def _signed_sqrt(x):
    return math.copysign(math.sqrt(abs(x)), x)


def wigner_3j_squared(j1, j2, j3, m1, m2, m3):
    """Signed square s * w**2 of the 3j symbol w = s |w|, as an exact Fraction."""
    j1, j2, j3, m1, m2, m3 = map(_half, (j1, j2, j3, m1, m2, m3))
    if m1 + m2 + m3 != 0 or not _triangle(j1, j2, j3):
        return Fraction(0)
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        if abs(m) > j or (j - m).denominator != 1:
            return Fraction(0)
    pre = _delta_sq(j1, j2, j3)
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        pre *= _fact(j + m) * _fact(j - m)
    kmin = max(0, j2 - j3 - m1, j1 - j3 + m2)
    kmax = min(j1 + j2 - j3, j1 - m1, j2 + m2)
    s = Fraction(0)
    k = kmin
    while k <= kmax:
        den = (_fact(k) * _fact(j1 + j2 - j3 - k) * _fact(j1 - m1 - k) * _fact(j2 + m2 - k)
               * _fact(j3 - j2 + m1 + k) * _fact(j3 - j1 - m2 + k))
        s += Fraction((-1) ** int(k), den)
        k += 1
    phase = -1 if int(j1 - j2 - m3) % 2 else 1
    val = pre * s * s
    return val if phase * s >= 0 else -val


def wigner_3j(j1, j2, j3, m1, m2, m3):
    """Wigner 3j symbol, exact Racah sum converted to float at the end."""
    return _signed_sqrt(float(wigner_3j_squared(j1, j2, j3, m1, m2, m3)))


def wigner_6j_squared(j1, j2, j3, j4, j5, j6):
    """Signed square of the 6j symbol {j1 j2 j3; j4 j5 j6} as an exact Fraction."""
    j1, j2, j3, j4, j5, j6 = map(_half, (j1, j2, j3, j4, j5, j6))
    triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
    if not all(_triangle(*t) for t in triads):
        return Fraction(0)
    pre = Fraction(1)
    for t in triads:
        pre *= _delta_sq(*t)
    sums = [sum(t) for t in triads]
    tops = (j1 + j2 + j4 + j5, j2 + j3 + j5 + j6, j3 + j1 + j6 + j4)
    s = Fraction(0)
    t = max(sums)
    while t <= min(tops):
        den = 1
        for a in sums:
            den *= _fact(t - a)
        for b in tops:
            den *= _fact(b - t)
        s += Fraction((-1) ** int(t) * _fact(t + 1), den)
        t += 1
    val = pre * s * s
    return val if s >= 0 else -val


def wigner_6j(j1, j2, j3, j4, j5, j6):
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6}."""
    return _signed_sqrt(float(wigner_6j_squared(j1, j2, j3, j4, j5, j6)))


# ---------------------------------------------------------------- dipole elements

def reduced_dipole_element(j_prime, c0=1.0, gamma=1.0):
    """|<J'||d||J>| from |<J'||d||J>|^2 = c0 (2J'+1) gamma (positive root)."""
    return math.sqrt(c0 * (2 * float(j_prime) + 1) * gamma)


def dipole_matrix_element(f_prime, m_prime, f, m, q, j_prime, j=_J_GROUND, i_nuc=_I_NUC,
                          reduced_element=1.0):
    """<J' F' m'| d.eps_q |J F m> for polarization index q in {-1, 0, +1}."""
    if q not in (-1, 0, 1):
        raise ValueError("q must be -1, 0 or +1")
    f_prime, m_prime, f, m, j_prime, j, i_nuc = map(
        _half, (f_prime, m_prime, f, m, j_prime, j, i_nuc))
    if m_prime != m + q:
        return 0j
    six = wigner_6j_squared(j_prime, f_prime, i_nuc, f, j, 1)
    three = wigner_3j_squared(f, 1, f_prime, m, q, -m_prime)
    if six == 0 or three == 0:
        return 0j
    ang = _signed_sqrt(float(six * three * (2 * f + 1) * (2 * f_prime + 1)))
    phase = -1 if int(j_prime + i_nuc - m_prime) % 2 else 1
    return complex(phase * ang * reduced_element)


# ---------------------------------------------------------------- beam settings

@dataclass(frozen=True)
class Polarization:
    """Complex amplitudes on the (sigma-, pi, sigma+) basis, normalised."""

    components: tuple

    def __post_init__(self):
        c = np.asarray(self.components, dtype=complex).ravel()
        if c.size != 3:
            raise ValueError("polarization needs three components (sigma-, pi, sigma+)")
        n = np.linalg.norm(c)
        if n == 0:
            raise ValueError("zero polarization vector")
        object.__setattr__(self, "components", tuple(c / n))

    @property
    def minus(self):
        return self.components[0]

    @property
    def pi(self):
        return self.components[1]

    @property
    def plus(self):
        return self.components[2]

    def weights(self):
        return np.abs(np.asarray(self.components)) ** 2

    def amplitude(self, q):
        return self.components[q + 1]

    def with_phase(self, phi):
        return Polarization(tuple(np.exp(1j * phi) * np.asarray(self.components)))

    def to_list(self):
        return [[float(z.real), float(z.imag)] for z in self.components]


@dataclass(frozen=True)
class RamanSetting:
    detuning: float
    omega_f: float
    phase: float = 0.0
    c0: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.omega_f > 0:
            raise ValueError("fine-structure splitting must be positive")
        scale = abs(self.omega_f)
        if abs(self.detuning) < 1e-12 * scale or abs(self.detuning - self.omega_f) < 1e-12 * scale:
            raise ValueError("detuning sits on a pole (0 or omega_F)")

    @classmethod
    def magic(cls, omega_f, **kw):
        return cls(magic_detuning(omega_f), omega_f, **kw)

    def manifolds(self):
        """(J', [F'], detuning) for the two excited manifolds."""
        return ((Fraction(1, 2), (0, 1), self.detuning),
                (Fraction(3, 2), (1, 2), self.detuning - self.omega_f))


@dataclass(frozen=True)
class RamanRates:
    up: complex
    down: complex
    balanced: bool
    imbalance: float
    method: str


def magic_detuning(omega_f):
    """(sqrt 2 - 1) omega_F, the detuning at which the force closed forms hold."""
    return (math.sqrt(2) - 1) * omega_f


def emission_minimum_detuning(omega_f):
    """Exact minimiser of 1/D^2 + 2/(D - omega_F)^2 on (0, omega_F): omega_F / (1 + 2^(1/3))."""
    return omega_f / (1 + 2 ** (1 / 3))


def balanced_polarizations():
    """Normalised blue and red polarizations (-1, s, 1) and (1, s, 1), s^2 = 2 + 3/sqrt 2."""
    s = math.sqrt(2 + 3 / math.sqrt(2))
    return Polarization((-1, s, 1)), Polarization((1, s, 1))


def _couplings(setting, state):
    """Yield (q, squared matrix element, detuning) for the excited levels reachable from state."""
    f, m = QUBIT_STATES[state]
    for j_prime, f_primes, det in setting.manifolds():
        red = reduced_dipole_element(j_prime, setting.c0, setting.gamma)
        for f_prime in f_primes:
            for q in (-1, 0, 1):
                if abs(m + q) > f_prime:
                    continue
                d = dipole_matrix_element(f_prime, m + q, f, m, q, j_prime, reduced_element=red)
                if d != 0:
                    yield q, abs(d) ** 2, det


# ---------------------------------------------------------------- Stark shift

def stark_shift_difference(pol_r, pol_b, setting):
    """Closed-form delta_Stark(up) - delta_Stark(down) [rad/s]."""
    d, wf = setting.detuning, setting.omega_f
    pre = setting.c0 * setting.gamma * wf / (12 * d * (d - wf))
    wb, wr = pol_b.weights(), pol_r.weights()
    return float(pre * (wb[0] + wr[0] - wb[2] - wr[2]))


def stark_shifts(pol_r, pol_b, setting):
    """Per-state Stark shifts (1/4) sum |<m|d.eps|i>|^2 / Delta_i from the level sum."""
    out = {}
    for state in QUBIT_STATES:
        s = 0.0
        for pol in (pol_r, pol_b):
            w = pol.weights()
            for q, d2, det in _couplings(setting, state):
                s += w[q + 1] * d2 / det
        out[state] = s / 4
    return out


# ---------------------------------------------------------------- spontaneous emission

def spontaneous_emission_rate(pol_r, pol_b, setting, populations=(0.5, 0.5), balance_tol=1e-9):
    """Closed-form scattering rate, valid when the differential Stark shift vanishes.

    ``populations`` is accepted for interface symmetry with the level sum;
    under the balance condition the rate does not depend on it.
    """
    wb, wr = pol_b.weights(), pol_r.weights()
    if abs(wb[0] + wr[0] - wb[2] - wr[2]) > balance_tol:
        raise ValueError("sigma+ and sigma- weights are not balanced; the closed form does not apply")
    d, wf = setting.detuning, setting.omega_f
    r0, b0 = wr[1], wb[1]
    ang = (2 + r0 + b0) / (12 * math.sqrt((1 + r0) * (1 + b0)))
    return float(setting.c0 * setting.gamma ** 2 * ang * (1 / d**2 + 2 / (d - wf) ** 2))


def spontaneous_emission_sum(pol_r, pol_b, setting, populations=(0.5, 0.5)):
    """(1/4) sum_i sum_beams sum_states P gamma |<m|d.eps|i>|^2 / Delta_i^2."""
    p = dict(zip(("up", "down"), populations))
    if abs(sum(populations) - 1) > 1e-12 or min(populations) < 0:
        raise ValueError("populations must be non-negative and sum to one")
    total = 0.0
    for state in QUBIT_STATES:
        for pol in (pol_r, pol_b):
            w = pol.weights()
            for q, d2, det in _couplings(setting, state):
                total += p[state] * setting.gamma * w[q + 1] * d2 / det**2
    return total / 4


def minimize_emission(pol_r, pol_b, omega_f, closed_form=True):
    """Numerical minimiser of the scattering rate over Delta in (0, omega_F)."""
    def f(d):
        s = RamanSetting(d, omega_f)
        if closed_form:
            return spontaneous_emission_rate(pol_r, pol_b, s)
        return spontaneous_emission_sum(pol_r, pol_b, s)

    eps = 1e-6 * omega_f
    res = minimize_scalar(f, bounds=(eps, omega_f - eps), method="bounded",
                          options={"xatol": 1e-12 * omega_f})
    return float(res.x)


# ---------------------------------------------------------------- Rabi rates

def _rates_sum(pol_r, pol_b, setting):
    out = {}
    for state in QUBIT_STATES:
        s = 0j
        for q, d2, det in _couplings(setting, state):
            s += pol_b.amplitude(q) * np.conj(pol_r.amplitude(q)) * d2 / det
        out[state] = np.exp(1j * setting.phase) * s / 4
    return out["up"], out["down"]


def _rates_closed(pol_r, pol_b, setting):
    g = setting.c0 * setting.gamma
    wf = setting.omega_f
    p = [pol_b.amplitude(q) * np.conj(pol_r.amplitude(q)) for q in (-1, 0, 1)]
    r2 = math.sqrt(2)
    down = -g * (p[1] + p[0] + p[2]) / (12 * wf)
    up = g * (-2 * p[1] + (2 + 3 * r2) * p[2] - 3 * (2 + r2) * p[0]) / (24 * wf)
    ph = np.exp(1j * setting.phase)
    return ph * up, ph * down


def raman_rabi_rates(pol_r, pol_b, setting, method="auto", tol=1e-10):
    """Two-photon Rabi rates of both qubit states.

    ``method='closed'`` uses the closed forms (only at the magic detuning),
    ``'sum'`` the explicit sum over excited hyperfine levels, and ``'auto'``
    picks the closed form when the detuning is magic.
    """
    magic = abs(setting.detuning - magic_detuning(setting.omega_f)) <= 1e-12 * setting.omega_f
    if method == "auto":
        method = "closed" if magic else "sum"
    if method == "closed":
        if not magic:
            raise ValueError("closed-form rates need Delta = (sqrt 2 - 1) omega_F")
        up, down = _rates_closed(pol_r, pol_b, setting)
    elif method == "sum":
        up, down = _rates_sum(pol_r, pol_b, setting)
    else:
        raise ValueError(f"unknown method {method!r}")
    scale = max(abs(up), abs(down))
    imb = float(abs(up + down) / scale) if scale > 0 else 0.0
    return RamanRates(complex(up), complex(down), bool(scale > 0 and imb < tol), imb, method)


def polarization_report(pol_r, pol_b, setting):
    """JSON-ready summary of shift, scattering rate and force balance."""
    rates = raman_rabi_rates(pol_r, pol_b, setting)
    try:
        rse = spontaneous_emission_rate(pol_r, pol_b, setting)
    except ValueError:
        rse = None
    return {
        "schema_version": 1,
        "detuning": setting.detuning,
        "omega_f": setting.omega_f,
        "phase": setting.phase,
        "pol_red": pol_r.to_list(),
        "pol_blue": pol_b.to_list(),
        "stark_shift_difference": stark_shift_difference(pol_r, pol_b, setting),
        "spontaneous_emission_rate": rse,
        "spontaneous_emission_sum": float(spontaneous_emission_sum(pol_r, pol_b, setting)),
        "rabi_up": [rates.up.real, rates.up.imag],
        "rabi_down": [rates.down.real, rates.down.imag],
        "force_balanced": rates.balanced,
        "imbalance": rates.imbalance,
        "method": rates.method,
    }
