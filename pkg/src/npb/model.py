"""Non-stiff right-hand sides of the mollified Nernst-Planck-Boussinesq system.

The stiff linear terms D Lap c_i, nu Lap u and kappa Lap T are left out; the
integrators treat them exactly with per-mode exponential factors. With
``eta = 0`` the operators reduce to the unmollified system.

Transport and electromigration are evaluated in divergence form so every
scalar right-hand side has an exactly zero mean. Products are formed
pointwise and the 2/3 mask is applied to the resulting coefficients.

Each public function returns physical-space fields; the ``*_hat`` variants
return rfft coefficients and are what the time steppers use.
"""

from __future__ import annotations

import numpy as np

from npb import spectral as sp
from npb.errors import TemperatureFloorViolated
from npb.state import ElectroFields, charge_density

_E3 = 2  # vertical direction is x_3


def advecting_velocity(u, p, g, u_hat=None):
    """J_eta u, the velocity that transports every field."""
    if p.eta == 0:
        return u
    if u_hat is None:
        u_hat = g.fft(u)
    return g.ifft(sp.mollifier_symbol(p.eta, g) * u_hat)


def grad_psi_mollified(c, p, g):
    """grad J_eta J_eta psi straight from the concentrations (no neutrality check)."""
    rho = charge_density(c, p)
    psi_hat = sp.poisson_hat(g.fft(rho), p.epsilon, g)
    return rho, g.ifft(sp.grad_hat(sp.mollifier_symbol(2.0 * p.eta, g) * psi_hat, g))


def _inverse_temperature(T, p):
    tmin = float(np.min(T))
    if not tmin >= 0.5 * p.T_star:
        raise TemperatureFloorViolated(
            f"min T = {tmin:.6g} is below T*/2 = {0.5 * p.T_star:.6g}")
    return 1.0 / T


def np_fluxes(c, Ju, T, grad_psi_moll, p):
    """Non-diffusive species fluxes, shape (N, 3, n, n, n).

    flux_i = -(J u) c_i + D (e/k_B) z_i c_i / T * grad J J psi
    """
    inv_T = _inverse_temperature(T, p)
    mig = p.D * p.e_charge / p.k_B
    z = np.asarray(p.valences)[:, None, None, None, None]
    return -Ju[None] * c[:, None] + mig * z * (c * inv_T)[:, None] * grad_psi_moll[None]


def temperature_flux(Ju, T):
    return -Ju * T


def momentum_products(u, Ju, rho, grad_psi_moll):
    """Stack of (J u)_j u_i for i, j (9 entries, i-major) and rho * grad J J psi (3)."""
    adv = (Ju[None, :] * u[:, None]).reshape((9,) + u.shape[1:])
    return np.concatenate([adv, rho[None] * grad_psi_moll])


def flux_divergence_hat(flux_hat, g):
    """Dealiased divergence; the vector axis sits just before the spatial axes."""
    kd = g.kd
    d = 1j * sp.TWO_PI * (kd[0] * flux_hat[..., 0, :, :, :]
                          + kd[1] * flux_hat[..., 1, :, :, :]
                          + kd[2] * flux_hat[..., 2, :, :, :])
    return g.dealias_mask * d


def buoyancy(T, c, ref, p):
    """g (alpha_T (T - T_r) - alpha_S (S - S_r)), the vertical body force."""
    S = np.tensordot(np.asarray(p.molar_masses), c, axes=1)
    return p.g * (p.alpha_T * (T - ref.T_r) - p.alpha_S * (S - ref.S_r))


def momentum_from_hat(prod_hat, buoy_hat, p, g):
    """Assemble P[-(Ju.grad)u + b e3 - J(rho grad J J psi)] in spectral space."""
    kd = g.kd
    adv = prod_hat[:9].reshape((3, 3) + prod_hat.shape[1:])
    rhs = -1j * sp.TWO_PI * (kd[0] * adv[:, 0] + kd[1] * adv[:, 1] + kd[2] * adv[:, 2])
    elec = prod_hat[9:12]
    if p.eta > 0:
        elec = sp.mollifier_symbol(p.eta, g) * elec
    rhs = g.dealias_mask * (rhs - elec)
    rhs[_E3] += buoy_hat
    rhs = sp.leray_hat(rhs, g)
    # the mean force vanishes analytically; drop its roundoff so mean(u) stays 0
    rhs[:, 0, 0, 0] = 0.0
    return rhs


# -- public per-equation operators --------------------------------------------

def np_rhs_hat(s, ef, p, g):
    Ju = advecting_velocity(s.u, p, g)
    flux = np_fluxes(s.c, Ju, s.T, ef.grad_psi_moll, p)
    return flux_divergence_hat(g.fft(flux), g)


def np_rhs(s, ef, p, g):
    """-div((J u) c_i) + D (e/k_B) div(z_i c_i / T grad J J psi) for each species."""
    return g.ifft(np_rhs_hat(s, ef, p, g))


def momentum_rhs_hat(s, ef, ref, p, g):
    Ju = advecting_velocity(s.u, p, g)
    prod_hat = g.fft(momentum_products(s.u, Ju, ef.rho, ef.grad_psi_moll))
    buoy_hat = g.fft(buoyancy(s.T, s.c, ref, p))
    return momentum_from_hat(prod_hat, buoy_hat, p, g)


def momentum_rhs(s, ef, ref, p, g):
    return g.ifft(momentum_rhs_hat(s, ef, ref, p, g))


def temperature_rhs_hat(s, p, g):
    Ju = advecting_velocity(s.u, p, g)
    return flux_divergence_hat(g.fft(temperature_flux(Ju, s.T)), g)


def temperature_rhs(s, p, g):
    """-div((J u) T), dealiased."""
    return g.ifft(temperature_rhs_hat(s, p, g))


# -- fused evaluation for the integrators --------------------------------------

def rhs_hat(c, u, T, ref, p, g):
    """All three right-hand sides from one batched forward transform.

    Returns ``(c_rhs_hat, u_rhs_hat, T_rhs_hat)``. Electric fields are
    recomputed from ``c``; neutrality is not re-checked here.
    """
    rho, gpm = grad_psi_mollified(c, p, g)
    Ju = advecting_velocity(u, p, g)
    n_sp = c.shape[0]
    flux = np_fluxes(c, Ju, T, gpm, p).reshape((3 * n_sp,) + T.shape)
    stack = np.concatenate([
        flux,
        temperature_flux(Ju, T),
        momentum_products(u, Ju, rho, gpm),
        buoyancy(T, c, ref, p)[None],
    ])
    h = g.fft(stack)
    nf = 3 * n_sp
    c_rhs = flux_divergence_hat(h[:nf].reshape((n_sp, 3) + h.shape[1:]), g)
    T_rhs = flux_divergence_hat(h[nf:nf + 3], g)
    u_rhs = momentum_from_hat(h[nf + 3:nf + 15], h[nf + 15], p, g)
    return c_rhs, u_rhs, T_rhs


def electro_from_state(s, p, g):
    """ElectroFields without the neutrality check (used inside integrator stages)."""
    rho, gpm = grad_psi_mollified(s.c, p, g)
    psi = g.ifft(sp.poisson_hat(g.fft(rho), p.epsilon, g))
    return ElectroFields(rho=rho, psi=psi, grad_psi_moll=gpm)
