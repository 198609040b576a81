"""Fast property checks behind ``npb selftest``.

Each check returns ``(ok, detail)``; ``run_selftest`` prints one line per
check and returns True only if all of them pass.
"""

from __future__ import annotations

import math
import tempfile
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from npb import diagnostics as dg
from npb import io
from npb import spectral as sp
from npb.errors import FormatError, NonNeutralSource
from npb.state import (FieldIC, ICSpec, PhysParams, RandomSmooth, SingleMode, compute_electro,
                       constant_state, make_initial_state, random_smooth_field)
from npb.timestepper import StepControl, run


def _smooth(g, seed, k0=2.0):
    return random_smooth_field(np.random.default_rng(seed), k0, g)


def check_derivative_identities(g, seed):
    f = _smooth(g, seed)
    err = np.max(np.abs(sp.divergence(sp.gradient(f, g), g) - sp.laplacian(f, g)))
    scale = np.max(np.abs(sp.laplacian(f, g)))
    return err <= 1e-12 * scale, f"|div grad f - lap f| / |lap f| = {err / scale:.2e}"


def check_mollifier(g, seed):
    f = 1.0 + 0.5 * _smooth(g, seed)
    a = sp.mollify(sp.mollify(f, 0.1, g), 0.2, g)
    b = sp.mollify(f, 0.3, g)
    semigroup = np.max(np.abs(a - b))
    mean_shift = abs(np.mean(b) - np.mean(f))
    ok = semigroup <= 1e-13 and mean_shift <= 1e-14
    return ok, f"semigroup {semigroup:.2e}, mean shift {mean_shift:.2e}"


def check_poisson(g, seed):
    x = g.coordinates()
    rho = np.sin(sp.TWO_PI * x[0]) * np.cos(sp.TWO_PI * 2 * x[1])
    psi = sp.poisson_solve(rho, 0.5, g)
    exact = rho / (0.5 * 4 * math.pi**2 * 5)
    err = np.max(np.abs(psi - exact))
    try:
        sp.poisson_solve(rho + 1.0, 0.5, g)
        rejects = False
    except NonNeutralSource:
        rejects = True
    return err <= 1e-13 and rejects, f"closed-form error {err:.2e}, non-neutral rejected: {rejects}"


def check_leray(g, seed):
    v = np.stack([_smooth(g, seed + j) for j in range(3)])
    w = sp.leray_project(v, g)
    div = np.max(np.abs(sp.divergence(w, g)))
    idem = np.max(np.abs(sp.leray_project(w, g) - w))
    return div <= 1e-12 and idem <= 1e-13, f"max |div Pv| {div:.2e}, |PPv - Pv| {idem:.2e}"


def check_entropy_oracle(g, seed):
    # 1 + 0.5 sin has mean 1; the 1D integral is the exact value
    exact = quad(lambda s: (1 + 0.5 * math.sin(2 * math.pi * s)) *
                 math.log(1 + 0.5 * math.sin(2 * math.pi * s)), 0, 1)[0]
    x = g.coordinates()
    c = 1 + 0.5 * np.sin(sp.TWO_PI * x[0])
    val = dg.entropy(c, 1.0)
    margin = dg.ckp_check(c, 1.0)
    return abs(val - exact) <= 1e-6 and margin >= 0, f"E = {val:.10f} (quad {exact:.10f}), CKP margin {margin:.3e}"


def check_steady_state(g, seed):
    p = PhysParams(epsilon=0.1)
    s0 = constant_state([1.0, 1.0], 1.5, g)
    s1 = run(s0, p, g, StepControl.fixed(1e-3), 0.02)
    dev = max(np.max(np.abs(s1.c - s0.c)), np.max(np.abs(s1.T - s0.T)), np.max(np.abs(s1.u)))
    return dev <= 1e-12, f"max field change {dev:.2e}"


def check_conservation(g, seed):
    p = PhysParams(epsilon=0.1, alpha_T=1.0)
    ic = ICSpec(
        c=(FieldIC(1.0, (RandomSmooth(0.3),)), FieldIC(1.0, (RandomSmooth(0.3),))),
        T=FieldIC(1.2, (SingleMode(0.1, (1, 0, 0)),)),
        u=(FieldIC(0.0, (SingleMode(0.5, (0, 0, 1)),)), FieldIC(), FieldIC()),
        seed=seed,
    )
    s0 = make_initial_state(ic, p, g)
    s1 = run(s0, p, g, StepControl.fixed(1e-3), 0.02)
    dc = float(np.max(np.abs(s1.c.mean(axis=(1, 2, 3)) - s0.c.mean(axis=(1, 2, 3)))))
    dT = abs(float(s1.T.mean() - s0.T.mean()))
    mu = float(np.max(np.abs(s1.u.mean(axis=(1, 2, 3)))))
    ef = compute_electro(s1, p, g)
    canc = dg.cancellation_residual(s1, ef, p, g)
    ok = dc <= 1e-10 and dT <= 1e-10 and mu <= 1e-12 and canc <= 1e-10
    return ok, f"d mean c {dc:.1e}, d mean T {dT:.1e}, mean u {mu:.1e}, cancellation {canc:.1e}"


def check_serialization(g, seed):
    rng = np.random.default_rng(seed)
    from npb.state import SimState

    s = SimState(0.25, rng.random((2,) + g.shape), rng.standard_normal((3,) + g.shape),
                 1 + rng.random(g.shape))
    rec = dg.DiagnosticsRecord(0.1, 1 / 3, math.pi, 2.0, 1e-300, 0.5, 0.0, 1e-9, 1.0,
                               [0.1, 0.2], [0.3, 0.4])
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "s.npb"
        io.write_snapshot(s, path)
        back = io.read_snapshot(path)
        same = (back.time == s.time and np.array_equal(back.c, s.c)
                and np.array_equal(back.u, s.u) and np.array_equal(back.T, s.T))
        path.write_bytes(path.read_bytes()[:10])
        try:
            io.read_snapshot(path)
            truncated = False
        except FormatError:
            truncated = True
        csv = Path(d) / "t.csv"
        io.write_timeseries([rec], csv)
        csv_ok = io.read_timeseries(csv) == [rec]
    return same and truncated and csv_ok, (f"snapshot identity {same}, truncation detected "
                                           f"{truncated}, CSV round trip {csv_ok}")


CHECKS = (
    ("derivative identities", check_derivative_identities),
    ("mollifier semigroup", check_mollifier),
    ("Poisson solve", check_poisson),
    ("Leray projection", check_leray),
    ("entropy and CKP", check_entropy_oracle),
    ("steady state", check_steady_state),
    ("conservation", check_conservation),
    ("serialization", check_serialization),
)


def run_selftest(n=16, seed=0, out=print):
    g = sp.Grid(n)
    all_ok = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn(g, seed)
        except Exception as exc:  # a crash counts as a failure, reported like one
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return all_ok
