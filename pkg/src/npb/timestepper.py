"""Time integration: integrating-factor Heun and a per-step Picard iteration.

Both schemes treat D Lap, nu Lap and kappa Lap exactly through the factors
E(dt) = exp(-coeff 4 pi^2 |k|^2 dt) and work on rfft coefficients between
stages, so means (k = 0) are carried over untouched.

imex_rk2 (Heun with integrating factor)::

    y*      = E (y_n + dt N(y_n))
    y_{n+1} = E (y_n + dt/2 N(y_n)) + dt/2 N(y*)

picard (integrating-factor trapezoidal rule solved by fixed-point sweeps)::

    y^{(m+1)} = E (y_n + dt/2 N(y_n)) + dt/2 N(y^{(m)})

where each sweep updates T, then u, then c_i and feeds the fresh iterates
forward in that order, with the potential lagged one sweep.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from npb import model
from npb import spectral as sp
from npb.errors import NumericalAbort, PicardDiverged, StateInvalid, TemperatureFloorViolated
from npb.state import NONNEG_TOL, ReferenceValues, SimState, validate_state

log = logging.getLogger(__name__)

MODES = ("imex_rk2", "picard")


@dataclass(frozen=True)
class StepControl:
    dt: float = 1e-3
    cfl_target: float = 0.4
    dt_min: float = 1e-6
    dt_max: float = 1e-2
    mode: str = "imex_rk2"
    picard_tol: float = 1e-10
    picard_max_iter: int = 50
    nonneg_tol: float = NONNEG_TOL

    def __post_init__(self):
        if not (self.dt > 0 and self.dt_min > 0 and self.dt_max > 0):
            raise ValueError("dt, dt_min and dt_max must be positive")
        if not self.dt_min <= self.dt <= self.dt_max:
            raise ValueError("need dt_min <= dt <= dt_max")
        if not 0 < self.cfl_target <= 1:
            raise ValueError("cfl_target must be in (0, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not self.picard_tol > 0 or self.picard_max_iter < 1:
            raise ValueError("picard_tol must be > 0 and picard_max_iter >= 1")

    @classmethod
    def fixed(cls, dt, **kw):
        return cls(dt=dt, dt_min=dt, dt_max=dt, **kw)

    @property
    def adaptive(self):
        return self.dt_min < self.dt_max


class _Factors:
    """Diffusion factors for one step size, cached per (dt, params)."""

    def __init__(self, p, g, dt):
        self.c = sp.heat_symbol(p.D, dt, g)
        self.u = sp.heat_symbol(p.nu, dt, g)
        self.T = sp.heat_symbol(p.kappa, dt, g)


_factor_cache = {}


def _factors(p, g, dt):
    key = (id(g), p, float(dt))
    f = _factor_cache.get(key)
    if f is None:
        if len(_factor_cache) > 32:
            _factor_cache.clear()
        f = _factor_cache[key] = _Factors(p, g, dt)
    return f


def _finish(s, dt, c, u, T, p, ctrl):
    out = SimState(s.time + dt, c, u, T)
    if not out.is_finite():
        raise StateInvalid(f"non-finite field after step at t = {out.time:.6g}")
    report = validate_state(out, p, ctrl.nonneg_tol)
    if not report.ok:
        raise StateInvalid(f"invalid state at t = {out.time:.6g}: {report}")
    return out


def imex_step(s, p, g, ctrl, ref=None, dt=None):
    """One integrating-factor Heun step of size ``dt`` (default ``ctrl.dt``)."""
    dt = ctrl.dt if dt is None else dt
    if ref is None:
        ref = ReferenceValues.from_state(s, p)
    E = _factors(p, g, dt)
    ch, uh, Th = g.fft(s.c), g.fft(s.u), g.fft(s.T)

    nc, nu_, nT = model.rhs_hat(s.c, s.u, s.T, ref, p, g)
    ch1 = E.c * (ch + dt * nc)
    uh1 = E.u * (uh + dt * nu_)
    Th1 = E.T * (Th + dt * nT)
    c1, u1, T1 = g.ifft(ch1), g.ifft(uh1), g.ifft(Th1)

    try:
        with np.errstate(over="ignore", invalid="ignore"):
            nc1, nu1, nT1 = model.rhs_hat(c1, u1, T1, ref, p, g)
    except TemperatureFloorViolated as exc:
        raise StateInvalid(f"predictor left the admissible set at t = {s.time:.6g}: {exc}") from None
    half = 0.5 * dt
    c2 = g.ifft(E.c * (ch + half * nc) + half * nc1)
    u2 = g.ifft(E.u * (uh + half * nu_) + half * nu1)
    T2 = g.ifft(E.T * (Th + half * nT) + half * nT1)
    return _finish(s, dt, c2, u2, T2, p, ctrl)


def _rel_change(new, old):
    num = sum(sp.l2_norm(a - b) for a, b in zip(new, old))
    den = sum(sp.l2_norm(a) for a in new)
    return num / den if den > 0 else num


def picard_step(s, p, g, ctrl, ref=None, dt=None):
    """One step solved by fixed-point sweeps; returns ``(state, iterations)``.

    Convergence is declared when the summed L^2 change of all fields over
    one sweep, relative to their summed L^2 norm, drops to ``picard_tol``.
    """
    dt = ctrl.dt if dt is None else dt
    if ref is None:
        ref = ReferenceValues.from_state(s, p)
    E = _factors(p, g, dt)
    half = 0.5 * dt
    ch, uh, Th = g.fft(s.c), g.fft(s.u), g.fft(s.T)

    # explicit half of the trapezoidal rule, fixed for the whole step
    nc0, nu0, nT0 = model.rhs_hat(s.c, s.u, s.T, ref, p, g)
    base_c = E.c * (ch + half * nc0)
    base_u = E.u * (uh + half * nu0)
    base_T = E.T * (Th + half * nT0)

    c, u, T = s.c, s.u, s.T
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            for it in range(1, ctrl.picard_max_iter + 1):
                rho, gpm = model.grad_psi_mollified(c, p, g)
                Ju = model.advecting_velocity(u, p, g)

                nT = model.flux_divergence_hat(g.fft(model.temperature_flux(Ju, T)), g)
                T_new = g.ifft(base_T + half * nT)

                prod = g.fft(np.concatenate([model.momentum_products(u, Ju, rho, gpm),
                                             model.buoyancy(T_new, c, ref, p)[None]]))
                nU = model.momentum_from_hat(prod[:12], prod[12], p, g)
                u_new = g.ifft(base_u + half * nU)

                Ju_new = model.advecting_velocity(u_new, p, g)
                flux = model.np_fluxes(c, Ju_new, T_new, gpm, p)
                nC = model.flux_divergence_hat(g.fft(flux), g)
                c_new = g.ifft(base_c + half * nC)

                change = _rel_change((c_new, u_new, T_new), (c, u, T))
                c, u, T = c_new, u_new, T_new
                if not np.isfinite(change):
                    raise PicardDiverged(f"Picard iterates became non-finite (dt = {dt:g})")
                if change <= ctrl.picard_tol:
                    return _finish(s, dt, c, u, T, p, ctrl), it
    except TemperatureFloorViolated as exc:
        raise PicardDiverged(f"Picard iterate left the admissible set (dt = {dt:g}): {exc}")
    raise PicardDiverged(
        f"no convergence in {ctrl.picard_max_iter} sweeps (last change {change:.3e}, dt = {dt:g})")


def step(s, p, g, ctrl, ref=None, dt=None):
    if ctrl.mode == "picard":
        return picard_step(s, p, g, ctrl, ref, dt)[0]
    return imex_step(s, p, g, ctrl, ref, dt)


def cfl_dt(s, p, g, ctrl):
    """cfl_target * h / max|J u| clamped to [dt_min, dt_max]."""
    Ju = model.advecting_velocity(s.u, p, g)
    vmax = float(np.max(np.abs(Ju)))
    dt = ctrl.dt_max if vmax == 0 else ctrl.cfl_target * g.spacing / vmax
    return min(max(dt, ctrl.dt_min), ctrl.dt_max)


@dataclass
class Hook:
    """Call ``fn(state, step_index)`` every ``every`` steps (and at both ends)."""

    every: int
    fn: object


def run(s0, p, g, ctrl, t_end, hooks=(), ref=None, max_steps=None, abort_record=None):
    """Integrate from ``s0`` to ``t_end``; returns the final state.

    Fixed-step when ``dt_min == dt_max``, otherwise CFL-adaptive. The last
    step is shortened to land on ``t_end``. On a numerical failure the raised
    :class:`NumericalAbort` carries the last valid state, plus
    ``abort_record(state)`` when that callable is given.
    """
    if ref is None:
        ref = ReferenceValues.from_state(s0, p)
    hooks = [h if isinstance(h, Hook) else Hook(*h) for h in hooks]
    s = s0
    n = 0
    for h in hooks:
        h.fn(s, n)
    if t_end <= s.time:
        return s
    eps = 1e-12 * max(1.0, abs(t_end))
    while s.time < t_end - eps:
        if max_steps is not None and n >= max_steps:
            break
        dt = cfl_dt(s, p, g, ctrl) if ctrl.adaptive else ctrl.dt
        remaining = t_end - s.time
        if dt >= remaining - eps:
            dt = remaining
        try:
            s_new = step(s, p, g, ctrl, ref, dt)
        except NumericalAbort as exc:
            exc.last_state = s
            if abort_record is not None:
                exc.record = abort_record(s)
            log.error("run aborted at t = %.6g after %d steps: %s", s.time, n, exc)
            raise
        if abs(s_new.time - t_end) <= eps:
            s_new.time = float(t_end)
        s = s_new
        n += 1
        last = s.time >= t_end - eps
        for h in hooks:
            if n % h.every == 0 or (last and n % h.every):
                h.fn(s, n)
    return s
