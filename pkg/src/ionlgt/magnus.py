"""Closed-form second-order Magnus exponent of the three-pair Raman scheme.

Each pair L drives H_L(t) = -sum_i sigma_L^(i) sum_m [c_m^dag G_Lim(t) + h.c.]
with

    G_Lim(t) = eta_mi sum_b A_bi s_L(mu_b t) exp(i w_m t),

s = sin for pairs I, III and cos for pair II, and A_bi the complex force
amplitude (motional phase included). Every G is a short sum of exponentials
c_k exp(i nu_k t), so all nested time integrals reduce to

    S1(a, t)    = int_0^t exp(i a s) ds                = t  exp[iat, 0]
    D(a, b, t)  = int_0^t dt2 int_0^t2 dt1 e^{i a t2 + i b t1}
                                                      = t^2 exp[i(a+b)t, iat, 0]

where exp[...] are divided differences of the exponential, evaluated with
series expansions when nodes nearly coincide (including exact resonances,
which produce the secular growth).

Conventions of the exponent (ground-state relevant pieces):

    alpha_L[i, m]      coefficient of sigma_L^(i) c_m^dag         (first order)
    chi_L[i, j]        coefficient of sigma_L^(i) sigma_L^(j), summed over
                       ordered pairs, so chi -> -(i/2) J t
    beta_M[i, m, n]    coefficient of sigma_M^(i) c_{L,m}^dag c_{K,n}^dag from
                       [H_L, H_K]; (L, K) = (II, III), (I, III), (II, I)
                       for M = x, y, z
    bfield_L[i, m]     coefficient of sigma_{L'}^(i) c_{L,m}^dag from [H_B, H_L],
                       L' = y for L = I and x for L = II
    gamma[i]           i B_i t / 4 (enters with its conjugate completion)
"""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import factorial

from .coupling import PAIR_BRANCH, PAIRS

__all__ = [
    "dd1",
    "dd2",
    "s1",
    "d2",
    "FrequencyParams",
    "MagnusTerms",
    "frequency_params",
    "drive_exponentials",
    "magnus_terms",
    "extract_j_from_chi",
    "contribution_report",
    "panels_to_csv",
]

_SERIES_W1 = 1e-3
_SERIES_SPREAD = 1.0
_NTERMS = 24


def _e1(w):
    """(exp(w) - 1) / w, accurate for small |w|."""
    w = np.asarray(w, dtype=complex)
    out = np.empty_like(w)
    small = np.abs(w) < _SERIES_W1
    ws = w[small]
    out[small] = 1 + ws / 2 * (1 + ws / 3 * (1 + ws / 4 * (1 + ws / 5 * (1 + ws / 6))))
    wl = w[~small]
    out[~small] = np.expm1(wl) / wl
    return out


def dd1(z0, z1):
    """First divided difference of exp at nodes z0, z1."""
    z0, z1 = np.broadcast_arrays(np.asarray(z0, dtype=complex), np.asarray(z1, dtype=complex))
    return np.exp(z1) * _e1(z0 - z1)


def _h_series(w0, w1, w2):
    """sum_k h_k(w0, w1, w2) / (k + 2)!, h_k complete homogeneous polynomials."""
    h1 = np.ones_like(w0)
    h2 = np.ones_like(w0)
    h3 = np.ones_like(w0)
    total = h3 / 2.0
    for k in range(1, _NTERMS):
        h1 = h1 * w0
        h2 = h2 * w1 + h1
        h3 = h3 * w2 + h2
        total = total + h3 / factorial(k + 2)
    return total


def dd2(z0, z1, z2):
    """Second divided difference of exp at nodes z0, z1, z2 (any may coincide)."""
    z0, z1, z2 = np.broadcast_arrays(*(np.asarray(z, dtype=complex) for z in (z0, z1, z2)))
    shape = z0.shape
    z = np.stack([z0.ravel(), z1.ravel(), z2.ravel()])
    out = np.empty(z.shape[1], dtype=complex)
    sep = np.stack([np.abs(z[0] - z[1]), np.abs(z[0] - z[2]), np.abs(z[1] - z[2])])
    near = sep.max(axis=0) < _SERIES_SPREAD
    if near.any():
        zn = z[:, near]
        c = zn.mean(axis=0)
        out[near] = np.exp(c) * _h_series(zn[0] - c, zn[1] - c, zn[2] - c)
    far = ~near
    if far.any():
        zf = z[:, far]
        pair = np.argmax(sep[:, far], axis=0)
        # endpoints (a, c) are the farthest pair, b the remaining node
        order = np.array([[0, 1, 2], [0, 2, 1], [1, 2, 0]])[pair]
        cols = np.arange(zf.shape[1])
        a = zf[order[:, 0], cols]
        cc = zf[order[:, 1], cols]
        b = zf[order[:, 2], cols]
        out[far] = (dd1(a, b) - dd1(b, cc)) / (a - cc)
    return out.reshape(shape)


def s1(a, t):
    """int_0^t exp(i a s) ds."""
    a, t = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(t, dtype=float))
    return t * dd1(1j * a * t, 0)


def d2(a, b, t):
    """int_0^t dt2 int_0^t2 dt1 exp(i a t2 + i b t1)."""
    a, b, t = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (a, b, t)))
    return t**2 * dd2(1j * (a + b) * t, 1j * a * t, 0)


# --- drive bookkeeping -------------------------------------------------------

@dataclass(frozen=True)
class FrequencyParams:
    """Sum and difference frequencies per pair, shape (B, M) each.

    ``big[L] = mu_L + w_m`` (Delta) and ``small[L] = mu_L - w_m`` (delta).
    """

    big: dict
    small: dict


def frequency_params(drives, setup):
    big, small = {}, {}
    for pair, drive in drives.items():
        if drive is None:
            continue
        w = setup.modes_for(pair).frequencies
        big[pair] = drive.beatnotes[:, None] + w[None, :]
        small[pair] = drive.beatnotes[:, None] - w[None, :]
    return FrequencyParams(big, small)


def drive_exponentials(drive, eta, modes):
    """Coefficients c[i, m, k] and frequencies nu[m, k] with G_im = sum_k c e^{i nu t}."""
    a = drive.amplitudes  # (B, N)
    w = modes.frequencies
    mu = drive.beatnotes
    nb = mu.size
    n = a.shape[1]
    m = w.size
    c = np.empty((n, m, 2 * nb), dtype=complex)
    nu = np.empty((m, 2 * nb))
    if drive.pair == "II":  # cos(mu t + th) e^{iwt}
        cp, cm = a / 2, a.conj() / 2
    else:  # sin(mu t + th) e^{iwt}
        cp, cm = a / 2j, -a.conj() / 2j
    for b in range(nb):
        c[:, :, 2 * b] = cp[b][:, None] * eta.T
        c[:, :, 2 * b + 1] = cm[b][:, None] * eta.T
        nu[:, 2 * b] = w + mu[b]
        nu[:, 2 * b + 1] = w - mu[b]
    return c, nu


@dataclass
class MagnusTerms:
    """Exponent coefficients at ``evaluation_time`` (arrays carry a leading time axis
    when several times are requested)."""

    alpha_x: np.ndarray
    alpha_y: np.ndarray
    alpha_z: np.ndarray
    beta_x: np.ndarray
    beta_y: np.ndarray
    beta_z: np.ndarray
    gamma_z: np.ndarray
    chi_x: np.ndarray
    chi_y: np.ndarray
    chi_z: np.ndarray
    bfield_x: np.ndarray
    bfield_y: np.ndarray
    evaluation_time: np.ndarray

    def chi(self, axis):
        return getattr(self, f"chi_{axis}")


_AXIS = {"I": "x", "II": "y", "III": "z"}
# M: (L, K, epsilon_{sigma_L sigma_K M})
_BETA_PAIRS = {"x": ("II", "III", 1.0), "y": ("I", "III", -1.0), "z": ("II", "I", -1.0)}


def _alpha(c, nu, t):
    # (T, N, M)
    return 1j * np.einsum("imk,tmk->tim", c, s1(nu[None], t[:, None, None]))


def _chi(c, nu, t):
    dmat = d2(-nu[None, :, :, None], nu[None, :, None, :], t[:, None, None, None])  # (T,M,K,K)
    x = np.einsum("imk,jml,tmkl->tij", c.conj(), c, dmat)
    chi = -0.5j * (x + np.swapaxes(x, 1, 2)).imag
    idx = np.arange(chi.shape[1])
    chi[:, idx, idx] = 0
    return chi


def _beta(cl, nul, ck, nuk, eps, t):
    tt = t[:, None, None, None, None]
    d_lk = d2(nul[None, :, None, :, None], nuk[None, None, :, None, :], tt)  # (T,M,N',K,L)
    d_kl = d2(nuk[None, None, :, None, :], nul[None, :, None, :, None], tt)
    return -1j * eps * np.einsum("imk,inl,tmnkl->timn", cl, ck, d_lk - d_kl)


def _bfield(c, nu, bz, eps, t):
    tt = t[:, None, None]
    diff = d2(0.0, nu[None], tt) - d2(nu[None], 0.0, tt)  # (T, M, K)
    return -0.5j * eps * bz[None, :, None] * np.einsum("imk,tmk->tim", c, diff)


def magnus_terms(drives, setup, bz, t):
    """All exponent coefficients at time(s) ``t`` [s].

    ``drives`` maps pair label to LaserDrive (missing pairs are off) and
    ``setup`` is a :class:`~ionlgt.coupling.ChainSetup`; ``bz`` in rad/s.
    """
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("evaluation times must be non-negative")
    n = setup.n_ions
    nt = t.size
    bz = np.zeros(n) if bz is None else np.asarray(bz, dtype=float)
    exps = {}
    for pair in PAIRS:
        d = drives.get(pair)
        if d is not None:
            exps[pair] = drive_exponentials(d, setup.eta[pair], setup.modes_for(pair))
    zero2 = np.zeros((nt, n, n), dtype=complex)
    out = {}
    for pair in PAIRS:
        ax = _AXIS[pair]
        if pair in exps:
            c, nu = exps[pair]
            out[f"alpha_{ax}"] = _alpha(c, nu, t)
            out[f"chi_{ax}"] = _chi(c, nu, t)
        else:
            out[f"alpha_{ax}"] = zero2.copy()
            out[f"chi_{ax}"] = zero2.copy()
    for m_ax, (l, k, eps) in _BETA_PAIRS.items():
        if l in exps and k in exps:
            out[f"beta_{m_ax}"] = _beta(*exps[l], *exps[k], eps, t)
        else:
            out[f"beta_{m_ax}"] = np.zeros((nt, n, n, n), dtype=complex)
    # [sigma_z, sigma_x] = 2i sigma_y, [sigma_z, sigma_y] = -2i sigma_x
    out["bfield_y"] = _bfield(*exps["I"], bz, 1.0, t) if "I" in exps else zero2.copy()
    out["bfield_x"] = _bfield(*exps["II"], bz, -1.0, t) if "II" in exps else zero2.copy()
    out["gamma_z"] = 0.25j * bz[None, :] * t[:, None]
    if scalar:
        out = {k: v[0] for k, v in out.items()}
        return MagnusTerms(**out, evaluation_time=t[0])
    return MagnusTerms(**out, evaluation_time=t)


def extract_j_from_chi(times, chi_series, min_detuning=None):
    """J estimate from the secular slope of Im chi(t) (Im chi -> -J t / 2).

    Returns ``(J, oscillation_rms)``; the rms is the residual of the linear
    fit (with intercept) per element.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(chi_series).imag
    if t.size < 2:
        raise ValueError("need at least two times")
    if min_detuning is not None and t.max() - t.min() < 10 / abs(min_detuning):
        warnings.warn("fit window shorter than 10 / min|detuning|", stacklevel=2)
    a = np.column_stack([t, np.ones_like(t)])
    flat = y.reshape(t.size, -1)
    coef, *_ = np.linalg.lstsq(a, flat, rcond=None)
    resid = flat - a @ coef
    slope = coef[0].reshape(y.shape[1:])
    rms = np.sqrt(np.mean(resid**2, axis=0)).reshape(y.shape[1:])
    return -2 * slope, rms


PANEL_TITLES = {
    "a": "first order, all pairs",
    "b": "[H_I, H_I]",
    "c": "[H_II, H_II]",
    "d": "[H_III, H_III]",
    "e": "[H_I, H_II] cross terms",
    "f": "[H_I, H_III] cross terms",
    "g": "[H_II, H_III] cross terms",
    "h": "[H_B, H_L] cross terms",
    "i": "-i int H_B",
}


def contribution_report(drives, setup, bz, t_grid, ion=0):
    """Nine labelled panels of exponent contributions for one ion.

    Returns ``{panel: {series_label: complex array over t_grid}}``; labels
    use 1-based ion and mode indices.
    """
    t = np.asarray(t_grid, dtype=float)
    mt = magnus_terms(drives, setup, bz, t)
    n = setup.n_ions
    panels = {k: {} for k in PANEL_TITLES}
    for pair in PAIRS:
        ax = _AXIS[pair]
        alpha = getattr(mt, f"alpha_{ax}")
        for m in range(n):
            panels["a"][f"alpha_{ax}[{ion + 1},{m + 1}]"] = alpha[:, ion, m]
    for key, ax in (("b", "x"), ("c", "y"), ("d", "z")):
        chi = mt.chi(ax)
        for j in range(n):
            if j != ion:
                panels[key][f"chi_{ax}[{ion + 1},{j + 1}]"] = chi[:, ion, j]
    for key, ax in (("e", "z"), ("f", "y"), ("g", "x")):
        beta = getattr(mt, f"beta_{ax}")
        for m in range(n):
            for k in range(n):
                panels[key][f"beta_{ax}[{ion + 1},{m + 1},{k + 1}]"] = beta[:, ion, m, k]
    for ax, src in (("y", "I"), ("x", "II")):
        bf = getattr(mt, f"bfield_{ax}")
        for m in range(n):
            panels["h"][f"bfield_{ax}({src})[{ion + 1},{m + 1}]"] = bf[:, ion, m]
    panels["i"][f"field_z[{ion + 1}]"] = 2 * mt.gamma_z[:, ion]
    return panels


def panels_to_csv(panels, t_grid, path=None, header_lines=()):
    """Long-format CSV: t_ms, panel, series, re, im."""
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t_ms", "panel", "series", "re", "im"])
    t_ms = np.asarray(t_grid) * 1e3
    for key, series in panels.items():
        for label, vals in series.items():
            for tv, v in zip(t_ms, vals):
                w.writerow([f"{tv:.17g}", key, label, f"{v.real:.17g}", f"{v.imag:.17g}"])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
