"""Entropy, energy and dissipation functionals, inequality checks, decay fits.

All integrals are grid averages over the unit torus (volume 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from npb import spectral as sp
from npb.errors import InsufficientSamples, InvalidMean, NonPositiveSample
from npb.state import NONNEG_TOL


@dataclass
class DiagnosticsRecord:
    time: float
    entropy_E: float
    energy_calE: float
    dissipation_D: float
    temp_L2_dev: float
    u_L2: float
    cancellation_residual: float
    ckp_margin: float
    min_T: float
    min_c: list = field(default_factory=list)
    conc_L1_dev: list = field(default_factory=list)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    amplitude: float
    r_squared: float
    window: tuple


def _xlogx_rel(c, cbar):
    """Pointwise c log(c/cbar) - c + cbar with 0 log 0 = 0."""
    c = np.maximum(c, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(c > 0, c * np.log(c / cbar), 0.0)
    return t - c + cbar


def entropy(c, cbar, nonneg_tol=NONNEG_TOL):
    """Relative entropy  int c log(c/cbar) dx.

    Evaluated through the pointwise nonnegative integrand
    c log(c/cbar) - c + cbar, which integrates to the same value when cbar is
    the mean of c. Values down to -nonneg_tol are clamped to zero.
    """
    if not cbar > 0:
        raise InvalidMean(f"reference mean must be positive, got {cbar}")
    cmin = float(np.min(c))
    if cmin < -nonneg_tol:
        raise ValueError(f"concentration minimum {cmin:.3e} below -{nonneg_tol:g}")
    return float(np.mean(_xlogx_rel(c, cbar)))


def _species_means(s):
    return [float(np.mean(ci)) for ci in s.c]


def total_entropy(s):
    return sum(entropy(ci, cb) for ci, cb in zip(s.c, _species_means(s)))


def energy_calE(s, ef, p, g):
    """eps ||grad J psi||^2 + ||u||^2 + 2 k_B N_A T* E."""
    grad_Jpsi = sp.gradient(sp.mollify(ef.psi, p.eta, g), g)
    return (p.epsilon * sp.inner(grad_Jpsi, grad_Jpsi) + sp.inner(s.u, s.u)
            + 2.0 * p.k_B * p.N_A * p.T_star * total_entropy(s))


def _grad_sq(f, g):
    gr = sp.gradient(f, g)
    return sp.inner(gr, gr)


def dissipation_calD(s, ef, p, g):
    """(2D/eps)||J rho||^2 + nu ||grad u||^2 + (D k_B N_A T*/2) sum ||grad sqrt c_i||^2."""
    Jrho = sp.mollify(ef.rho, p.eta, g)
    grad_u = sum(_grad_sq(uj, g) for uj in s.u)
    sqrt_terms = sum(_grad_sq(np.sqrt(np.maximum(ci, 0.0)), g) for ci in s.c)
    return (2.0 * p.D / p.epsilon * sp.inner(Jrho, Jrho) + p.nu * grad_u
            + 0.5 * p.D * p.k_B * p.N_A * p.T_star * sqrt_terms)


def ckp_check(c, cbar):
    """Pinsker margin 2 cbar E(c) - ||c - cbar||_1^2; nonnegative when the bound holds."""
    if not cbar > 0:
        raise InvalidMean(f"reference mean must be positive, got {cbar}")
    return 2.0 * cbar * entropy(c, cbar) - sp.l1_norm(c - cbar) ** 2


def _int_xlogx(f):
    f = np.maximum(f, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(np.mean(np.where(f > 0, f * np.log(f), 0.0)))


def llogl_mollifier_check(f, eta, g):
    """Return (int J f log J f, int f log f)."""
    if float(np.min(f)) < 0:
        raise ValueError("field must be nonnegative")
    return _int_xlogx(sp.mollify(f, eta, g)), _int_xlogx(f)


def cancellation_terms(s, ef, p, g):
    """The two integrals <Ju . grad rho, JJpsi> and <rho grad JJpsi, Ju>."""
    Ju = sp.mollify(s.u, p.eta, g) if p.eta > 0 else s.u
    JJpsi = sp.mollify(ef.psi, 2.0 * p.eta, g)
    grad_rho = sp.gradient(ef.rho, g)
    a = sp.inner(np.sum(Ju * grad_rho, axis=0), JJpsi)
    b = sp.inner(ef.rho * ef.grad_psi_moll, Ju)
    return a, b


def cancellation_residual(s, ef, p, g):
    a, b = cancellation_terms(s, ef, p, g)
    scale = sp.l2_norm(s.u) * sp.l2_norm(ef.rho) * sp.l2_norm(ef.grad_psi_moll)
    return abs(a + b) / (scale + np.finfo(float).tiny)


def entropy_advection_residual(c, u, p, g):
    """<J u . grad c, log c>, zero for divergence-free u and positive c."""
    Ju = sp.mollify(u, p.eta, g) if p.eta > 0 else u
    return sp.inner(np.sum(Ju * sp.gradient(c, g), axis=0), np.log(c))


def decay_fit(series, window=None, min_samples=8):
    """Least-squares fit of log y = log A - rate * t over ``window``."""
    t = np.array([float(a) for a, _ in series])
    y = np.array([float(b) for _, b in series])
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, y = t[sel], y[sel]
    if t.size < min_samples:
        raise InsufficientSamples(f"need >= {min_samples} samples in window, got {t.size}")
    if np.any(~(y > 0)):
        raise NonPositiveSample("decay fit needs strictly positive samples")
    ly = np.log(y)
    slope, intercept = np.polyfit(t, ly, 1)
    resid = ly - (slope * t + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res <= 1e-300 else 0.0
    r2 = min(max(r2, 0.0), 1.0)
    return DecayFit(rate=float(-slope), amplitude=float(math.exp(intercept)), r_squared=r2,
                    window=(float(t[0]), float(t[-1])))


def smallness_check(p, means):
    """Threshold D k_B N_A T* nu / (4 C alpha_S^2) on max mean concentration."""
    if p.alpha_S == 0:
        return math.inf, True
    thr = p.D * p.k_B * p.N_A * p.T_star * p.nu / (4.0 * p.smallness_C * p.alpha_S**2)
    return thr, max(means) <= thr


def heat_decay_rate(p):
    """Rate of ||T - T_r||_2 on the unit torus: kappa / C_p with C_p = 1/(4 pi^2)."""
    return 4.0 * math.pi**2 * p.kappa


# -- energy budget -------------------------------------------------------------

def energy_budget_terms(s, ef, ref, p, g):
    """Signed production and forcing in d calE/dt = -production + forcing.

    production = (2D/eps)||J rho||^2 + 2 D e^2 N_A/k_B sum z_i^2 int c_i/T |grad JJpsi|^2
                 + 2 nu ||grad u||^2
                 + 2 k_B N_A T* D sum [int |grad c_i|^2/c_i + (e/k_B) z_i int grad JJpsi . grad c_i / T]
    forcing    = 2 <g (alpha_T (T - T_r) - alpha_S (S - S_r)), u_3>

    The two cancellation integrals are left out; they sum to zero.
    """
    Jrho = sp.mollify(ef.rho, p.eta, g)
    gp = ef.grad_psi_moll
    gp_sq = np.sum(gp * gp, axis=0)
    inv_T = 1.0 / s.T
    grad_u = sum(_grad_sq(uj, g) for uj in s.u)
    elec = 0.0
    ent = 0.0
    for z, ci in zip(p.valences, s.c):
        elec += z**2 * float(np.mean(ci * inv_T * gp_sq))
        gc = sp.gradient(ci, g)
        ent += float(np.mean(np.sum(gc * gc, axis=0) / ci))
        ent += p.e_charge / p.k_B * z * float(np.mean(inv_T * np.sum(gp * gc, axis=0)))
    production = (2.0 * p.D / p.epsilon * sp.inner(Jrho, Jrho)
                  + 2.0 * p.D * p.e_charge**2 * p.N_A / p.k_B * elec
                  + 2.0 * p.nu * grad_u
                  + 2.0 * p.k_B * p.N_A * p.T_star * p.D * ent)
    S = np.tensordot(np.asarray(p.molar_masses), s.c, axes=1)
    force = p.g * (p.alpha_T * (s.T - ref.T_r) - p.alpha_S * (S - ref.S_r))
    forcing = 2.0 * sp.inner(force, s.u[2])
    return production, forcing


# -- records -------------------------------------------------------------------

def make_record(s, ef, p, g, ref=None):
    """Evaluate every tracked functional on one state."""
    means = _species_means(s)
    T_r = ref.T_r if ref is not None else float(np.mean(s.T))
    ent = sum(entropy(ci, cb) for ci, cb in zip(s.c, means))
    grad_Jpsi = sp.gradient(sp.mollify(ef.psi, p.eta, g), g)
    calE = (p.epsilon * sp.inner(grad_Jpsi, grad_Jpsi) + sp.inner(s.u, s.u)
            + 2.0 * p.k_B * p.N_A * p.T_star * ent)
    return DiagnosticsRecord(
        time=float(s.time),
        entropy_E=ent,
        energy_calE=calE,
        dissipation_D=dissipation_calD(s, ef, p, g),
        temp_L2_dev=sp.l2_norm(s.T - T_r),
        u_L2=sp.l2_norm(s.u),
        cancellation_residual=cancellation_residual(s, ef, p, g),
        ckp_margin=min(ckp_check(ci, cb) for ci, cb in zip(s.c, means)),
        min_T=float(np.min(s.T)),
        min_c=[float(np.min(ci)) for ci in s.c],
        conc_L1_dev=[sp.l1_norm(ci - cb) for ci, cb in zip(s.c, means)],
    )
