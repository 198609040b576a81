"""Fourier machinery on the unit torus [0, 1]^3.

Fields are real numpy arrays of shape ``(n, n, n)`` indexed ``[i1, i2, i3]``
with ``x_j = i_j / n``; vector fields stack their components on a leading
axis, ``(3, n, n, n)``. Spectral coefficients come from ``scipy.fft.rfftn``
over the last three axes, so the third wavenumber is the halved one.

Wavenumbers are integers and every derivative multiplier carries the 2*pi,
e.g. d/dx_j -> 2*pi*i*k_j, Laplacian -> -4*pi^2 |k|^2. The mollifier uses the
bare integer |k|^2: (J_eta f)^_k = exp(-eta |k|^2) f^_k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from npb.errors import NonNeutralSource

TWO_PI = 2.0 * np.pi
_AXES = (-3, -2, -1)


@dataclass(frozen=True, eq=False)
class Grid:
    """Isotropic periodic grid with precomputed wavenumber tables.

    Only ``n_per_dim`` is an input; anisotropic grids are not representable.
    """

    n_per_dim: int
    spacing: float = field(init=False)
    k1: np.ndarray = field(init=False, repr=False)
    k2: np.ndarray = field(init=False, repr=False)
    k3: np.ndarray = field(init=False, repr=False)
    ksq: np.ndarray = field(init=False, repr=False)
    dealias_mask: np.ndarray = field(init=False, repr=False)
    # derivative wavenumbers with the Nyquist entry zeroed
    kd: tuple = field(init=False, repr=False)
    kdsq: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.n_per_dim
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise ValueError(f"n_per_dim must be an integer, got {n!r}")
        if n < 8 or n % 2:
            raise ValueError(f"n_per_dim must be even and >= 8, got {n}")
        n = int(n)
        object.__setattr__(self, "n_per_dim", n)
        object.__setattr__(self, "spacing", 1.0 / n)

        kfull = np.fft.fftfreq(n, d=1.0 / n)  # 0..n/2-1, -n/2..-1
        khalf = np.arange(n // 2 + 1, dtype=float)
        k1 = kfull[:, None, None]
        k2 = kfull[None, :, None]
        k3 = khalf[None, None, :]
        ksq = k1**2 + k2**2 + k3**2
        cut = n / 3.0
        mask = (np.abs(k1) <= cut) & (np.abs(k2) <= cut) & (np.abs(k3) <= cut)

        def no_nyquist(k):
            k = k.copy()
            k[np.abs(k) == n // 2] = 0.0
            return k

        kd = (no_nyquist(k1), no_nyquist(k2), no_nyquist(k3))
        kdsq = kd[0] ** 2 + kd[1] ** 2 + kd[2] ** 2
        for name, val in (("k1", k1), ("k2", k2), ("k3", k3), ("ksq", ksq),
                          ("dealias_mask", np.broadcast_to(mask, ksq.shape).copy()),
                          ("kd", kd), ("kdsq", kdsq)):
            object.__setattr__(self, name, val)

    @property
    def shape(self):
        n = self.n_per_dim
        return (n, n, n)

    @property
    def spectral_shape(self):
        n = self.n_per_dim
        return (n, n, n // 2 + 1)

    @property
    def n_modes(self):
        return self.n_per_dim**3

    def coordinates(self):
        """Return the three coordinate arrays x1, x2, x3 on the grid."""
        x = np.arange(self.n_per_dim) / self.n_per_dim
        return np.meshgrid(x, x, x, indexing="ij")

    def wavenumbers(self):
        """Integer wavenumber triple per full-FFT mode, in [-n/2, n/2)."""
        k = np.fft.fftfreq(self.n_per_dim, d=1.0 / self.n_per_dim).astype(int)
        return np.stack(np.meshgrid(k, k, k, indexing="ij"))

    def fft(self, f):
        return sfft.rfftn(f, axes=_AXES)

    def ifft(self, fh):
        return sfft.irfftn(fh, s=self.shape, axes=_AXES)


# -- spectral-space kernels (used by the model and the integrators) ---------

def grad_hat(fh, g):
    """Gradient multipliers applied to coefficients; returns (3, ...) array."""
    return np.stack([1j * TWO_PI * k * fh for k in g.kd])


def div_hat(vh, g):
    return 1j * TWO_PI * (g.kd[0] * vh[0] + g.kd[1] * vh[1] + g.kd[2] * vh[2])


def mollifier_symbol(eta, g):
    return np.exp(-eta * g.ksq)


def heat_symbol(coeff, dt, g):
    """Per-mode factor exp(-coeff * 4 pi^2 |k|^2 * dt) of the diffusion semigroup."""
    return np.exp(-coeff * TWO_PI**2 * g.ksq * dt)


def leray_hat(vh, g):
    kdotv = g.kd[0] * vh[0] + g.kd[1] * vh[1] + g.kd[2] * vh[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(g.kdsq > 0, kdotv / np.where(g.kdsq > 0, g.kdsq, 1.0), 0.0)
    return np.stack([vh[j] - g.kd[j] * ratio for j in range(3)])


# -- physical-space operations ----------------------------------------------

def gradient(f, g):
    return g.ifft(grad_hat(g.fft(f), g))


def divergence(v, g):
    return g.ifft(div_hat(g.fft(v), g))


def laplacian(f, g):
    return g.ifft(-(TWO_PI**2) * g.ksq * g.fft(f))


def mollify(f, eta, g):
    """Gaussian mollifier J_eta; works on scalar or stacked fields."""
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if eta == 0:
        return np.array(f, dtype=float, copy=True)
    return g.ifft(mollifier_symbol(eta, g) * g.fft(f))


def dealias(f, g):
    return g.ifft(g.dealias_mask * g.fft(f))


def default_mean_tol(rho):
    return 1e-10 * l2_norm(rho) + 1e-14


def poisson_hat(rho_hat, epsilon, g):
    with np.errstate(divide="ignore", invalid="ignore"):
        psi_hat = rho_hat / (epsilon * TWO_PI**2 * np.where(g.ksq > 0, g.ksq, 1.0))
    psi_hat[0, 0, 0] = 0.0
    return psi_hat


def poisson_solve(rho, epsilon, g, mean_tol=None):
    """Solve -epsilon * Lap(psi) = rho with psi in the zero-mean gauge."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if mean_tol is None:
        mean_tol = default_mean_tol(rho)
    m = float(np.mean(rho))
    if abs(m) > mean_tol:
        raise NonNeutralSource(
            f"mean charge {m:.3e} exceeds tolerance {mean_tol:.3e}; "
            "the compatibility (global neutrality) condition is violated")
    return g.ifft(poisson_hat(g.fft(rho), epsilon, g))


def leray_project(v, g):
    return g.ifft(leray_hat(g.fft(v), g))


def diffuse_exact(f, coeff, dt, g):
    if dt <= 0:
        raise ValueError("dt must be positive")
    return g.ifft(heat_symbol(coeff, dt, g) * g.fft(f))


# -- quadrature ---------------------------------------------------------------

def inner(f, h):
    """L^2 inner product on the unit torus (grid average, summed over components)."""
    f = np.asarray(f)
    h = np.asarray(h)
    if f.ndim == 4:
        return float(sum(np.mean(f[j] * h[j]) for j in range(f.shape[0])))
    return float(np.mean(f * h))


def l2_norm(f):
    return float(np.sqrt(max(inner(f, f), 0.0)))


def l1_norm(f):
    return float(np.mean(np.abs(f)))
