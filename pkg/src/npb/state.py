"""Parameters, prognostic state, derived electric fields and initial data."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import numpy as np
import scipy.constants as const

from npb import spectral as sp
from npb.errors import InvalidIC

NONNEG_TOL = 1e-8

SI_CONSTANTS = {
    "e_charge": const.e,
    "k_B": const.k,
    "N_A": const.N_A,
}


@dataclass(frozen=True)
class PhysParams:
    """Physical constants and model coefficients.

    Defaults are nondimensional (e = k_B = N_A = 1). ``smallness_C`` is the
    domain constant assumed by the decay-gate check.
    """

    D: float = 0.1
    nu: float = 0.1
    kappa: float = 0.1
    epsilon: float = 1.0
    e_charge: float = 1.0
    k_B: float = 1.0
    N_A: float = 1.0
    g: float = 1.0
    alpha_T: float = 0.0
    alpha_S: float = 0.0
    valences: tuple = (1.0, -1.0)
    molar_masses: tuple = (1.0, 1.0)
    T_star: float = 1.0
    eta: float = 0.0
    smallness_C: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "valences", tuple(float(z) for z in self.valences))
        object.__setattr__(self, "molar_masses", tuple(float(m) for m in self.molar_masses))
        for name in ("D", "nu", "kappa", "epsilon", "e_charge", "k_B", "N_A", "T_star",
                     "smallness_C"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("g", "alpha_T", "alpha_S", "eta"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if len(self.valences) < 1:
            raise ValueError("at least one species is required")
        if len(self.valences) != len(self.molar_masses):
            raise ValueError("valences and molar_masses must have the same length")
        if any(not m > 0 for m in self.molar_masses):
            raise ValueError("molar_masses must be > 0")

    @property
    def n_species(self):
        return len(self.valences)

    @property
    def faraday(self):
        return self.e_charge * self.N_A

    @property
    def gas_constant(self):
        return self.k_B * self.N_A

    def with_si_constants(self):
        return replace(self, **SI_CONSTANTS)


@dataclass
class SimState:
    """Prognostic fields at one instant: c has shape (N, n, n, n), u (3, n, n, n)."""

    time: float
    c: np.ndarray
    u: np.ndarray
    T: np.ndarray

    def copy(self):
        return SimState(self.time, self.c.copy(), self.u.copy(), self.T.copy())

    @property
    def n_species(self):
        return self.c.shape[0]

    def is_finite(self):
        return bool(np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.u))
                    and np.all(np.isfinite(self.T)))


@dataclass
class ElectroFields:
    rho: np.ndarray
    psi: np.ndarray
    grad_psi_moll: np.ndarray


@dataclass(frozen=True)
class ReferenceValues:
    """Reference temperature, salinity and species means, frozen at t = 0."""

    T_r: float
    S_r: float
    c_bar: tuple

    @classmethod
    def from_state(cls, s, p):
        c_bar = tuple(float(np.mean(ci)) for ci in s.c)
        S_r = float(sum(cb * m for cb, m in zip(c_bar, p.molar_masses)))
        return cls(T_r=float(np.mean(s.T)), S_r=S_r, c_bar=c_bar)

    def salinity(self, s, p):
        return np.tensordot(np.asarray(p.molar_masses), s.c, axes=1)

    def buoyancy_density(self, s, p):
        # beta_0 = 1
        return 1.0 - p.alpha_T * (s.T - self.T_r) + p.alpha_S * (self.salinity(s, p) - self.S_r)


# -- electric fields ----------------------------------------------------------

def charge_density(c, p):
    return p.faraday * np.tensordot(np.asarray(p.valences), c, axes=1)


def electro_mean_tol(c, rho, p):
    # The default Poisson tolerance is relative to ||rho||; near-neutral states
    # with large F*c need a floor scaled by the individual charge contributions.
    scale = p.faraday * sum(abs(z) * abs(float(np.mean(ci))) for z, ci in zip(p.valences, c))
    return sp.default_mean_tol(rho) + 1e-12 * scale


def compute_electro(s, p, g):
    rho = charge_density(s.c, p)
    tol = electro_mean_tol(s.c, rho, p)
    m = float(np.mean(rho))
    if abs(m) > tol:
        # raises NonNeutralSource with the standard message
        sp.poisson_solve(rho, p.epsilon, g, mean_tol=tol)
    psi_hat = sp.poisson_hat(g.fft(rho), p.epsilon, g)
    psi = g.ifft(psi_hat)
    grad_moll = g.ifft(sp.grad_hat(sp.mollifier_symbol(2.0 * p.eta, g) * psi_hat, g))
    return ElectroFields(rho=rho, psi=psi, grad_psi_moll=grad_moll)


def check_compatibility(s, p):
    """Return |sum_i e N_A z_i mean(c_i)|."""
    return abs(p.faraday * sum(z * float(np.mean(ci)) for z, ci in zip(p.valences, s.c)))


# -- validation -------------------------------------------------------------

@dataclass(frozen=True)
class NegativeConcentration:
    species: int  # 1-based
    min_value: float


@dataclass(frozen=True)
class TemperatureFloor:
    min_value: float


@dataclass(frozen=True)
class NonzeroMeanVelocity:
    component: int  # 1-based
    mean_value: float


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def __str__(self):
        if self.ok:
            return "state valid"
        return "; ".join(repr(v) for v in self.violations)


def validate_state(s, p, tol=NONNEG_TOL):
    report = ValidationReport()
    for i, ci in enumerate(s.c):
        m = float(np.min(ci))
        if not m >= -tol:
            report.violations.append(NegativeConcentration(i + 1, m))
    tmin = float(np.min(s.T))
    if not tmin >= p.T_star - tol:
        report.violations.append(TemperatureFloor(tmin))
    for j in range(3):
        mu = float(np.mean(s.u[j]))
        if not abs(mu) <= tol:
            report.violations.append(NonzeroMeanVelocity(j + 1, mu))
    return report


def mollify_state(s, eta, g):
    """Apply J_eta to every prognostic field (mollified initial data)."""
    if eta == 0:
        return s.copy()
    return SimState(s.time, sp.mollify(s.c, eta, g), sp.mollify(s.u, eta, g),
                    sp.mollify(s.T, eta, g))


# -- initial conditions ----------------------------------------------------------

@dataclass(frozen=True)
class SingleMode:
    """amplitude * sin(2 pi k.x + phase)."""

    amplitude: float
    wavevector: tuple = (1, 0, 0)
    phase: float = 0.0


@dataclass(frozen=True)
class RandomSmooth:
    """Seeded smooth perturbation with spectrum exp(-|k|^2/k0^2).

    The zero-mean perturbation is rescaled so that its maximum magnitude is
    ``amplitude``; the field minimum is then at least ``base - amplitude``.
    """

    amplitude: float
    k0: float = 2.0


@dataclass(frozen=True)
class FieldIC:
    base: float = 0.0
    components: tuple = ()


@dataclass(frozen=True)
class ICSpec:
    """Initial data per field. Missing velocity components default to zero."""

    c: tuple
    T: FieldIC
    u: tuple = (FieldIC(), FieldIC(), FieldIC())
    seed: int = 0


def random_smooth_field(rng, k0, g):
    white = rng.standard_normal(g.shape)
    h = g.fft(white) * np.exp(-0.5 * g.ksq / k0**2) * g.dealias_mask
    h[0, 0, 0] = 0.0
    f = g.ifft(h)
    peak = float(np.max(np.abs(f)))
    return f / peak if peak > 0 else f


def _build_field(fic, g, seed, index):
    x = g.coordinates()
    f = np.full(g.shape, float(fic.base))
    for m, comp in enumerate(fic.components):
        if isinstance(comp, SingleMode):
            k = comp.wavevector
            arg = sp.TWO_PI * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2])
            f += comp.amplitude * np.sin(arg + comp.phase)
        elif isinstance(comp, RandomSmooth):
            rng = np.random.default_rng([int(seed), index, m])
            f += comp.amplitude * random_smooth_field(rng, comp.k0, g)
        else:
            raise InvalidIC(f"unknown initial-condition component {comp!r}")
    return f


def make_initial_state(ic, p, g, tol=NONNEG_TOL):
    """Build and validate the t = 0 state described by ``ic``.

    Random velocity perturbations are Leray-projected; any other velocity
    data must already be divergence-free.
    """
    if len(ic.c) != p.n_species:
        raise InvalidIC(f"expected {p.n_species} concentration fields, got {len(ic.c)}")
    c = np.stack([_build_field(f, g, ic.seed, i) for i, f in enumerate(ic.c)])
    T = _build_field(ic.T, g, ic.seed, 100)

    if any(f.base != 0.0 for f in ic.u):
        raise InvalidIC("velocity must have zero mean (base = 0)")
    modes = [FieldIC(0.0, tuple(x for x in f.components if isinstance(x, SingleMode)))
             for f in ic.u]
    noise = [FieldIC(0.0, tuple(x for x in f.components if isinstance(x, RandomSmooth)))
             for f in ic.u]
    u = np.stack([_build_field(f, g, ic.seed, 200 + j) for j, f in enumerate(modes)])
    grad_scale = sum(sp.l2_norm(sp.gradient(uj, g)) for uj in u)
    if sp.l2_norm(sp.divergence(u, g)) > 1e-10 * grad_scale:
        raise InvalidIC("single-mode velocity data is not divergence-free")
    rand = np.stack([_build_field(f, g, ic.seed, 200 + j) for j, f in enumerate(noise)])
    u = u + sp.leray_project(rand, g)

    s = SimState(0.0, c, u, T)
    report = validate_state(s, p, tol)
    if not report.ok:
        raise InvalidIC(f"initial state rejected: {report}")
    resid = check_compatibility(s, p)
    scale = p.faraday * sum(abs(z) * abs(float(np.mean(ci))) for z, ci in zip(p.valences, c))
    if resid > 1e-12 * max(scale, 1.0):
        raise InvalidIC(f"compatibility violated: |sum e N_A z_i mean(c_i)| = {resid:.3e}")
    return s


def constant_state(c_values, T_value, g):
    """Uniform state with zero velocity."""
    c = np.stack([np.full(g.shape, float(v)) for v in c_values])
    return SimState(0.0, c, np.zeros((3,) + g.shape), np.full(g.shape, float(T_value)))
