"""Inverse design of Raman drives for a target coupling matrix.

Two routes are provided:

* :func:`calibrate_single_detuning` -- one beatnote per pair, Rabi
  frequencies chosen so that every nearest-neighbour coupling has the same
  magnitude. Longer-range couplings are whatever the chain gives.
* :func:`fit_multifrequency` -- N-1 beatnotes placed by a
  :class:`DetuningSchedule`, amplitudes found by bound-constrained nonlinear
  least squares with multi-start, subject to a per-ion Rabi budget and a
  bound on the first-order spin-phonon amplitude.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .coupling import (
    PAIR_BRANCH,
    RESONANCE_TOL,
    LaserDrive,
    ResonanceError,
    coupling_matrix,
    mode_kernel,
)

__all__ = [
    "DEFAULT_BUDGET",
    "DEFAULT_ENERGY_UNIT",
    "DetuningSchedule",
    "FitReport",
    "ConstraintReport",
    "InfeasibleDesignError",
    "CalibrationError",
    "detuning_schedule",
    "calibrate_single_detuning",
    "fit_multifrequency",
    "first_order_amplitudes",
    "check_constraints",
    "SchwingerDesign",
    "design_schwinger",
]

DEFAULT_BUDGET = 2 * np.pi * 2e6
# angular frequency of one dimensionless energy unit a g^2 / 2
DEFAULT_ENERGY_UNIT = 2 * np.pi * 1e3
ALPHA_BOUND = 0.5
ALPHA_HORIZON = 1e-3
N_ALPHA_TIMES = 32

THRESHOLDS = {
    "spin_phonon": 0.5,
    "sideband": 0.1,
    "bz_ratio": 0.1,
    "carrier": 1.0,
}


class InfeasibleDesignError(RuntimeError):
    """No restart met the residual tolerance and the constraints."""

    def __init__(self, message, report=None, drive=None):
        super().__init__(message)
        self.report = report
        self.drive = drive


class CalibrationError(RuntimeError):
    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class DetuningSchedule:
    f_s: float
    branch: str
    beatnotes: np.ndarray

    @property
    def n_beatnotes(self):
        return self.beatnotes.size


def detuning_schedule(modes, f_s, tol=RESONANCE_TOL):
    """One beatnote per adjacent mode pair.

    Transverse: mu_m = w_m + f_s (w_m - w_{m+1}), m = 1..N-1.
    Axial (COM last): mu_k = w_k + f_s (w_k - w_{k-1}), k = N..2, the mirror
    image, so f_s = -0.5 is the midpoint rule on both branches.
    """
    w = modes.frequencies
    n = w.size
    if n < 2:
        raise ValueError("a detuning schedule needs at least two modes")
    if modes.branch == "transverse":
        mu = w[:-1] + f_s * (w[:-1] - w[1:])
    else:
        k = np.arange(n - 1, 0, -1)
        mu = w[k] + f_s * (w[k] - w[k - 1])
    gap = np.abs(mu[:, None] - w[None, :])
    if gap.min() < tol:
        b, m = np.unravel_index(np.argmin(gap), gap.shape)
        raise ResonanceError(f"schedule beatnote {b + 1} collides with mode {m + 1}")
    return DetuningSchedule(float(f_s), modes.branch, mu)


@dataclass
class FitReport:
    residual: np.ndarray
    max_abs_residual: float
    relative_residual: float
    rabi_budget_per_ion: np.ndarray
    budget: float
    max_alpha: float
    constraint_flags: dict
    iterations: int
    seed: int
    restart: int = -1
    nn_spread: float = float("nan")
    contamination: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def feasible(self):
        return all(self.constraint_flags.values())

    def to_dict(self):
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, np.ndarray):
                d[k] = v.tolist()
        d["schema_version"] = 1
        d["feasible"] = self.feasible
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


# --- single detuning ---------------------------------------------------------

def calibrate_single_detuning(target, modes, mu, recoil, pair=None, gauge="symmetric"):
    """Rabi frequencies giving |J_{i,i+1}| = target for every neighbour pair.

    The conditions Omega_i Omega_{i+1} |K_{i,i+1}| = target form a linear
    system in log Omega with one free direction. ``gauge='symmetric'`` fixes
    it by mirror symmetry Omega_i = Omega_{N+1-i}; ``gauge='min-contamination'``
    picks the direction minimising the largest |J_ij|, |i-j| >= 2.
    Ion signs (pi phases) are chosen so every neighbour coupling equals
    +target (or -target when ``target`` < 0).

    Returns ``(drive, report)``.
    """
    pair = pair or ("II" if modes.branch == "axial" else "I")
    n = modes.n_modes
    drive0 = LaserDrive(pair, [mu], np.ones((1, n)))
    probe = coupling_matrix(drive0, modes, recoil)  # raises on resonance
    if n == 1:
        raise ValueError("a single ion has no couplings to calibrate")
    k = np.diag(probe, 1)
    if np.any(k == 0):
        raise CalibrationError("a neighbour coupling vanishes at this detuning", last=k)
    mag = abs(float(target))
    logp = np.log(mag / np.abs(k))
    a = np.zeros((n - 1, n))
    a[np.arange(n - 1), np.arange(n - 1)] = 1
    a[np.arange(n - 1), np.arange(1, n)] = 1
    if gauge == "symmetric":
        rows = [np.eye(n)[i] - np.eye(n)[n - 1 - i] for i in range(n // 2)]
        l, *_ = np.linalg.lstsq(np.vstack([a, rows]), np.concatenate([logp, np.zeros(len(rows))]),
                                rcond=None)
    elif gauge == "min-contamination":
        from scipy.optimize import minimize_scalar

        base, *_ = np.linalg.lstsq(a, logp, rcond=None)
        null = (-1.0) ** np.arange(n)

        def worst(s):
            om = np.exp(base + s * null)
            j = np.abs(np.outer(om, om) * probe)
            return max((j[i, jj] for i in range(n) for jj in range(i + 2, n)), default=0.0)

        s = minimize_scalar(worst, bounds=(-10, 10), method="bounded").x
        l = base + s * null
    else:
        raise ValueError(f"unknown gauge {gauge!r}")
    if not np.allclose(a @ l, logp, rtol=0, atol=1e-9):
        raise CalibrationError("neighbour conditions could not be met exactly", last=np.exp(l))
    omega = np.exp(l)
    # signs: s_{i+1} = s_i * sign(target * K_{i,i+1})
    signs = np.ones(n)
    for i in range(n - 1):
        signs[i + 1] = signs[i] * np.sign(target * k[i])
    drive = LaserDrive.from_signed(pair, [mu], signs * omega)
    jmat = coupling_matrix(drive, modes, recoil)
    nn = np.diag(jmat, 1)
    spread = float((nn.max() - nn.min()) / mag)
    far = [abs(jmat[i, j]) for i in range(n) for j in range(i + 2, n)]
    contamination = max(far, default=0.0) / mag
    tgt = np.diag(np.full(n - 1, float(target)), 1)
    tgt = tgt + tgt.T
    res = jmat - tgt
    rep = FitReport(
        residual=res,
        max_abs_residual=float(np.abs(res).max()),
        relative_residual=float(np.abs(res).max() / mag),
        rabi_budget_per_ion=np.abs(drive.signed_rabi).sum(axis=0),
        budget=float("inf"),
        max_alpha=float("nan"),
        constraint_flags={"nearest_neighbour_exact": spread < 1e-10},
        iterations=1,
        seed=-1,
        nn_spread=spread,
        contamination=float(contamination),
        meta={"gauge": gauge, "pair": pair},
    )
    return drive, rep


# --- multi-frequency fit ----------------------------------------------------

def _alpha_kernel(modes, beatnotes, pair, times):
    """S[t, b, m] such that alpha_{i,m}(t) = sum_b A_bi eta_mi S[t, b, m].

    alpha = i int_0^t s(mu t') exp(i w t') dt' with s = sin (pairs I, III)
    or cos (pair II).
    """
    from .magnus import s1

    w = modes.frequencies[None, None, :]
    mu = np.asarray(beatnotes)[None, :, None]
    t = np.asarray(times)[:, None, None]
    plus, minus = s1(w + mu, t), s1(w - mu, t)
    if pair == "II":
        return 1j * 0.5 * (plus + minus)
    return 0.5 * (plus - minus)


def first_order_amplitudes(amps, eta, kern):
    """|alpha_{i,m}(t)| for signed amplitudes ``amps`` (B, N); shape (T, N, M)."""
    return np.abs(np.einsum("bi,mi,tbm->tim", amps, eta, kern))


def fit_multifrequency(
    target,
    modes,
    schedule,
    recoil,
    eta,
    pair=None,
    budget=DEFAULT_BUDGET,
    alpha_bound=ALPHA_BOUND,
    restarts=16,
    seed=0,
    rel_tol=1e-8,
    n_alpha_times=N_ALPHA_TIMES,
    alpha_horizon=ALPHA_HORIZON,
    raise_on_infeasible=True,
    max_nfev=1000,
):
    """Fit signed amplitudes (B, N) so that J(amplitudes) matches ``target``.

    ``target`` is an N x N coupling matrix in rad/s. Returns ``(drive, report)``;
    raises :class:`InfeasibleDesignError` if no restart reaches ``rel_tol``
    (relative to max|target|) within the budget and alpha bound.
    """
    pair = pair or ("II" if modes.branch == "axial" else "I")
    if PAIR_BRANCH[pair] != modes.branch or schedule.branch != modes.branch:
        raise ValueError("pair, schedule and mode branch disagree")
    target = np.asarray(target, dtype=float)
    n = modes.n_modes
    mu = schedule.beatnotes
    nb = mu.size
    iu = np.triu_indices(n, 1)
    tvec = target[iu]
    scale_j = max(np.abs(tvec).max(), 1e-300)
    rng_times = np.random.default_rng(np.random.SeedSequence([seed, 0xA1FA]))
    times = np.sort(alpha_horizon * (1 - rng_times.random(n_alpha_times)))
    if budget <= 0:
        rep = _report(np.zeros((nb, n)), target, modes, mu, recoil, eta, pair, budget,
                      alpha_bound, times, rel_tol, 0, seed, -1)
        if raise_on_infeasible:
            raise InfeasibleDesignError("Rabi budget is zero; no coupling can be produced", rep)
        return LaserDrive.from_signed(pair, mu, np.zeros((nb, n))), rep

    kern = recoil * mode_kernel(modes, mu) / scale_j  # (B, N, N), J in target units
    skern = _alpha_kernel(modes, mu, pair, times)
    penalty_w = 10.0
    u = budget  # amplitude scale: x = A / budget

    def unpack(x):
        return x.reshape(nb, n) * u

    def resid(x):
        a = unpack(x)
        j = np.einsum("bi,bj,bij->ij", a, a, kern)
        r_fit = j[iu] - tvec / scale_j
        r_bud = np.maximum(np.abs(a).sum(axis=0) / budget - 1, 0)
        alpha = np.einsum("bi,mi,tbm->tim", a, eta, skern)
        r_alpha = np.maximum(np.abs(alpha) / alpha_bound - 1, 0).ravel()
        return np.concatenate([r_fit, penalty_w * r_bud, penalty_w * r_alpha])

    def jac(x):
        a = unpack(x)
        # dJ_ij/dA_bk = kern_b[i,j] (d_ik A_bj + d_jk A_bi)
        jf = np.zeros((iu[0].size, nb, n))
        ii, jj = iu
        for b in range(nb):
            kb = kern[b][iu]
            jf[np.arange(ii.size), b, ii] += kb * a[b, jj]
            jf[np.arange(ii.size), b, jj] += kb * a[b, ii]
        jf = jf.reshape(ii.size, -1) * u
        over = np.abs(a).sum(axis=0) / budget - 1
        jb = np.zeros((n, nb, n))
        for i in range(n):
            if over[i] > 0:
                jb[i, :, i] = np.sign(a[:, i]) / budget
        jb = penalty_w * jb.reshape(n, -1) * u
        alpha = np.einsum("bi,mi,tbm->tim", a, eta, skern)
        mag = np.abs(alpha)
        act = mag > alpha_bound
        ja = np.zeros(alpha.shape + (nb, n))
        if act.any():
            t_, i_, m_ = np.nonzero(act)
            ph = np.conj(alpha[act]) / mag[act]
            d = (ph[:, None] * eta[m_, i_][:, None] * skern[t_, :, m_]).real / alpha_bound
            ja[t_, i_, m_, :, i_] = d
        ja = penalty_w * ja.reshape(-1, nb * n) * u
        return np.vstack([jf, jb, ja])

    # initial amplitude scale from a uniform drive on the first beatnote
    ss = np.random.SeedSequence(seed)
    best = None
    for r, child in enumerate(ss.spawn(restarts)):
        rng = np.random.default_rng(child)
        x0 = rng.uniform(0, 1, nb * n) / nb
        sol = least_squares(resid, x0, jac=jac, bounds=(-1, 1), method="trf",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev,
                            x_scale="jac")
        cost = float(np.sum(sol.fun**2))
        if best is None or cost < best[0]:
            best = (cost, sol, r)
    _, sol, r = best
    amps = unpack(sol.x)
    rep = _report(amps, target, modes, mu, recoil, eta, pair, budget, alpha_bound, times,
                  rel_tol, int(sol.nfev), seed, r)
    drive = LaserDrive.from_signed(pair, mu, amps)
    if raise_on_infeasible and not rep.feasible:
        raise InfeasibleDesignError(
            f"best restart {r}: relative residual {rep.relative_residual:.3g}, "
            f"flags {rep.constraint_flags}", rep, drive)
    return drive, rep


def _report(amps, target, modes, mu, recoil, eta, pair, budget, alpha_bound, times, rel_tol,
            nfev, seed, restart):
    drive = LaserDrive.from_signed(pair, mu, amps)
    jmat = coupling_matrix(drive, modes, recoil)
    res = jmat - target
    scale = max(np.abs(target).max(), 1e-300)
    per_ion = np.abs(drive.signed_rabi).sum(axis=0)
    alpha = first_order_amplitudes(drive.signed_rabi, eta, _alpha_kernel(modes, mu, pair, times))
    max_alpha = float(alpha.max()) if alpha.size else 0.0
    flags = {
        "residual": bool(np.abs(res).max() <= rel_tol * scale),
        "budget": bool(np.all(per_ion <= budget * (1 + 1e-9))) and budget > 0,
        "alpha_bound": max_alpha <= alpha_bound * (1 + 1e-9),
    }
    return FitReport(
        residual=res,
        max_abs_residual=float(np.abs(res).max()),
        relative_residual=float(np.abs(res).max() / scale),
        rabi_budget_per_ion=per_ion,
        budget=float(budget),
        max_alpha=max_alpha,
        constraint_flags=flags,
        iterations=nfev,
        seed=seed,
        restart=restart,
        meta={"pair": pair, "alpha_times_s": times.tolist()},
    )


# --- validity conditions ----------------------------------------------------

@dataclass
class ConstraintReport:
    """Worst-case validity ratios; per-entry arrays keyed by pair."""

    spin_phonon: dict
    sideband: dict
    carrier: dict
    bz_ratio: dict
    worst: dict
    thresholds: dict

    @property
    def passed(self):
        return all(self.worst[k] < self.thresholds[k] for k in self.worst)

    def violations(self):
        return {k: v for k, v in self.worst.items() if not v < self.thresholds[k]}

    def to_dict(self):
        return {"schema_version": 1, "worst": self.worst, "thresholds": self.thresholds,
                "passed": self.passed, "violations": self.violations()}


def check_constraints(drives, setup, bz=None, thresholds=None, tol=RESONANCE_TOL):
    """Validity ratios of a set of drives.

    * spin-phonon |eta_mi Omega_bi / (mu_b - w_m)|
    * sideband |eta_mi^(2p-2) (mu_b - w_m) / (mu_b - p w_m)| for p = 2, 3
    * carrier Omega_bi / |mu_b|
    * field |B_z^(i)| / max_{b,m} |eta_mi Omega_bi| (pairs I and II)

    A beatnote within ``tol`` of a mode raises :class:`ResonanceError`.
    """
    th = dict(THRESHOLDS, **(thresholds or {}))
    sp, sb, ca, bzr = {}, {}, {}, {}
    n = setup.n_ions
    bz = np.zeros(n) if bz is None else np.abs(np.asarray(bz, dtype=float))
    for pair, drive in drives.items():
        if drive is None:
            continue
        modes = setup.modes_for(pair)
        eta = np.abs(setup.eta[pair])  # (M, N)
        w = modes.frequencies
        mu = drive.beatnotes
        gap = mu[:, None] - w[None, :]  # (B, M)
        if np.abs(gap).min() < tol:
            b, m = np.unravel_index(np.argmin(np.abs(gap)), gap.shape)
            raise ResonanceError(f"pair {pair} beatnote {b + 1} is resonant with mode {m + 1}")
        om = drive.rabi * drive.force_scale  # (B, N)
        sp[pair] = np.abs(eta[None, :, :] * om[:, None, :] / gap[:, :, None])  # (B, M, N)
        ratios = []
        for p in (2, 3):
            den = mu[:, None] - p * w[None, :]
            with np.errstate(divide="ignore"):
                r = eta[None, :, :] ** (2 * p - 2) * np.abs(gap / den)[:, :, None]
            ratios.append(np.where(np.isfinite(r), r, np.inf))
        sb[pair] = np.stack(ratios)  # (2, B, M, N)
        ca[pair] = om / np.abs(mu)[:, None]
        if pair in ("I", "II"):
            strength = (eta[None, :, :] * om[:, None, :]).max(axis=(0, 1))  # per ion
            with np.errstate(divide="ignore", invalid="ignore"):
                bzr[pair] = np.where(bz == 0, 0.0, bz / strength)
    worst = {
        "spin_phonon": max((float(v.max()) for v in sp.values()), default=0.0),
        "sideband": max((float(v.max()) for v in sb.values()), default=0.0),
        "carrier": max((float(v.max()) for v in ca.values()), default=0.0),
        "bz_ratio": max((float(v.max()) for v in bzr.values()), default=0.0),
    }
    return ConstraintReport(sp, sb, ca, bzr, worst, th)


# --- Schwinger designs ------------------------------------------------------

# single-beatnote detunings used for four ions [Hz, relative to the COM mode]
SINGLE_DETUNING_HZ = {"I": -830e3, "II": 3160e3, "III": 100e3}
MULTI_FS = {"I": 0.5, "II": -0.5, "III": -0.5}


@dataclass
class SchwingerDesign:
    """Drives, field and fit reports realising a Schwinger Hamiltonian."""

    target: object
    drives: dict
    bz: np.ndarray
    reports: dict
    energy_unit: float
    scheme: str

    def effective_model(self, setup):
        return setup.effective_model(self.drives, self.bz)


def _com_beatnote(setup, pair, offset_hz):
    modes = setup.modes_for(pair)
    return modes.frequencies[modes.com_index] + 2 * np.pi * offset_hz


def design_schwinger(params, setup, energy_unit=DEFAULT_ENERGY_UNIT, scheme=None,
                     budget=DEFAULT_BUDGET, restarts=16, seed=0, pairs=("I", "II", "III"),
                     detunings_hz=None, fs=None):
    """Drives for every coupling of the pure-spin Schwinger Hamiltonian.

    ``scheme='single'`` (default for four sites) calibrates the hopping terms
    with one beatnote each and fits the long-range zz couplings with one
    beatnote; ``scheme='multi'`` uses N-1 scheduled beatnotes per pair.
    Couplings are mapped to rad/s by ``energy_unit``.
    """
    from .target_models import schwinger_hamiltonian

    target = schwinger_hamiltonian(params)
    n = params.n_sites
    if setup.n_ions != n:
        raise ValueError(f"setup has {setup.n_ions} ions for {n} sites")
    scheme = scheme or ("single" if n <= 4 else "multi")
    det = dict(SINGLE_DETUNING_HZ, **(detunings_hz or {}))
    fss = dict(MULTI_FS, **(fs or {}))
    drives, reports = {}, {}
    for pair in pairs:
        axis = {"I": "x", "II": "y", "III": "z"}[pair]
        tj = target.coupling(axis) * energy_unit
        modes = setup.modes_for(pair)
        if scheme == "single":
            mu = _com_beatnote(setup, pair, det[pair])
            if pair == "III":
                sched = DetuningSchedule(float("nan"), modes.branch, np.array([mu]))
                d, r = fit_multifrequency(tj, modes, sched, setup.recoils[pair], setup.eta[pair],
                                          pair=pair, budget=budget, restarts=restarts, seed=seed)
            else:
                d, r = calibrate_single_detuning(tj[0, 1], modes, mu, setup.recoils[pair], pair)
        elif scheme == "multi":
            sched = detuning_schedule(modes, fss[pair])
            d, r = fit_multifrequency(tj, modes, sched, setup.recoils[pair], setup.eta[pair],
                                      pair=pair, budget=budget, restarts=restarts, seed=seed)
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        drives[pair] = d
        reports[pair] = r
    return SchwingerDesign(target, drives, target.bz * energy_unit, reports, energy_unit, scheme)
