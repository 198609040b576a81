import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from npb import diagnostics as dg
from npb import spectral as sp
from npb.errors import InsufficientSamples, InvalidMean, NonPositiveSample
from npb.state import (FieldIC, ICSpec, PhysParams, RandomSmooth, ReferenceValues, compute_electro,
                       constant_state, make_initial_state)
from npb.timestepper import StepControl, step

from conftest import sin_mode, smooth_field


def random_state(g, p, seed, amp=0.4):
    ic = ICSpec(c=tuple(FieldIC(1.0, (RandomSmooth(amp),)) for _ in range(p.n_species)),
                T=FieldIC(1.5, (RandomSmooth(0.2),)),
                u=tuple(FieldIC(0.0, (RandomSmooth(0.5),)) for _ in range(3)), seed=seed)
    return make_initial_state(ic, p, g)


def entropy_quadrature(a):
    # (1 + a sin t) log(1 + a sin t) over one period; mean is 1 so this is E
    f = lambda x: (1 + a * math.sin(2 * math.pi * x)) * math.log(1 + a * math.sin(2 * math.pi * x))
    return quad(f, 0, 1, epsabs=1e-14, epsrel=1e-13)[0]


def test_entropy_of_the_mean_is_zero(g16):
    assert dg.entropy(np.full(g16.shape, 2.0), 2.0) == 0.0


def test_entropy_against_quadrature(g16):
    c = 1 + 0.5 * sin_mode(g16, (1, 0, 0))
    exact = entropy_quadrature(0.5)
    assert dg.entropy(c, 1.0) == pytest.approx(exact, abs=1e-6)
    # leading Taylor term a^2/4
    assert exact == pytest.approx(0.0625, abs=3e-3)


def test_entropy_with_zero_region(g16):
    c = np.maximum(sin_mode(g16, (1, 0, 0)), 0.0)
    val = dg.entropy(c, float(np.mean(c)))
    assert np.isfinite(val) and val > 0


def test_entropy_errors(g16):
    c = np.ones(g16.shape)
    with pytest.raises(InvalidMean):
        dg.entropy(c, 0.0)
    with pytest.raises(InvalidMean):
        dg.ckp_check(c, -1.0)
    c[0, 0, 0] = -1e-3
    with pytest.raises(ValueError):
        dg.entropy(c, 1.0)
    c[0, 0, 0] = -1e-10  # within the tolerance, clamped
    assert np.isfinite(dg.entropy(c, 1.0))


def test_energy_and_dissipation_vanish_at_steady_state(g16):
    p = PhysParams(eta=0.1)
    s = constant_state([1.0, 1.0], 1.0, g16)
    ef = compute_electro(s, p, g16)
    assert dg.energy_calE(s, ef, p, g16) == 0.0
    assert dg.dissipation_calD(s, ef, p, g16) == 0.0


def test_shear_mode_energy_and_dissipation(g16):
    p = PhysParams(nu=0.3)
    s = constant_state([1.0, 1.0], 1.0, g16)
    s.u[0] = 0.1 * sin_mode(g16, (0, 1, 0))
    ef = compute_electro(s, p, g16)
    assert dg.energy_calE(s, ef, p, g16) == pytest.approx(0.005, rel=1e-13)
    assert dg.dissipation_calD(s, ef, p, g16) == pytest.approx(0.02 * math.pi**2 * 0.3, rel=1e-13)


def test_charge_part_of_dissipation(g16):
    # T* tiny suppresses the sqrt(c) term, leaving (2D/eps)||rho||^2
    p = PhysParams(D=0.7, epsilon=1, T_star=1e-14)
    s = constant_state([1.0, 1.0], 1.0, g16)
    s.c[0] += 0.3 * sin_mode(g16, (1, 0, 0))
    ef = compute_electro(s, p, g16)
    assert dg.dissipation_calD(s, ef, p, g16) == pytest.approx(0.09 * 0.7, rel=1e-10)


def test_electric_energy_single_mode(g16):
    # eps ||grad psi||^2 with psi = 0.3 sin / (4 pi^2 eps), T* tiny to drop the entropy part
    p = PhysParams(epsilon=0.5, T_star=1e-14)
    s = constant_state([1.0, 1.0], 1.0, g16)
    s.c[0] += 0.3 * sin_mode(g16, (1, 0, 0))
    ef = compute_electro(s, p, g16)
    expected = 0.5 * (0.3 / (0.5 * 2 * math.pi)) ** 2 * 0.5
    assert dg.energy_calE(s, ef, p, g16) == pytest.approx(expected, rel=1e-10)


def test_ckp_margin_cases(g16):
    assert dg.ckp_check(np.full(g16.shape, 3.0), 3.0) == 0.0
    c = 1 + 0.5 * sin_mode(g16, (1, 0, 0))
    # |sin| has kinks, so use the exact grid sum: sum_j |sin(2 pi j / n)| = 2 cot(pi / n)
    n = g16.n_per_dim
    l1 = 0.5 * 2 / math.tan(math.pi / n) / n
    assert dg.ckp_check(c, 1.0) == pytest.approx(2 * entropy_quadrature(0.5) - l1**2, abs=1e-6)
    # the continuum margin is positive too
    assert 2 * entropy_quadrature(0.5) - (1 / math.pi) ** 2 > 0


def test_ckp_random_sweep(g16):
    worst = math.inf
    for seed in range(200):
        rng = np.random.default_rng(seed)
        c = rng.uniform(0.01, 3.0) * (1 + rng.uniform(0, 0.99) * smooth_field(g16, seed, k0=3.0))
        worst = min(worst, dg.ckp_check(c, float(np.mean(c))))
    assert worst >= -1e-10


def test_llogl_trivial_cases(g16):
    f = np.full(g16.shape, 2.5)
    lhs, rhs = dg.llogl_mollifier_check(f, 0.3, g16)
    assert lhs == pytest.approx(rhs, abs=1e-14)
    f = 1 + 0.5 * smooth_field(g16, 2)
    assert dg.llogl_mollifier_check(f, 0.0, g16)[0] == dg.llogl_mollifier_check(f, 0.0, g16)[1]
    with pytest.raises(ValueError):
        dg.llogl_mollifier_check(f - 2, 0.1, g16)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), eta=st.floats(0.0, 3.0))
def test_llogl_inequality(seed, eta):
    g = sp.Grid(16)
    f = np.random.default_rng(seed).random(g.shape)
    lhs, rhs = dg.llogl_mollifier_check(f, eta, g)
    assert lhs <= rhs + 1e-10


def test_cancellation_trivial_cases(g16):
    p = PhysParams(epsilon=0.1)
    s = random_state(g16, p, 3)
    s.u[:] = 0.0
    ef = compute_electro(s, p, g16)
    assert dg.cancellation_terms(s, ef, p, g16) == (0.0, 0.0)
    s = random_state(g16, p, 3)
    s.c[:] = 1.0
    ef = compute_electro(s, p, g16)
    assert dg.cancellation_residual(s, ef, p, g16) == 0.0


@pytest.mark.parametrize("eta", [0.0, 0.05, 0.5])
def test_cancellation_law_random_state(g32, eta):
    p = PhysParams(epsilon=0.1, eta=eta)
    s = random_state(g32, p, 17)
    ef = compute_electro(s, p, g32)
    a, b = dg.cancellation_terms(s, ef, p, g32)
    assert abs(a) > 1e-6  # the individual terms are not trivially zero
    assert dg.cancellation_residual(s, ef, p, g32) <= 1e-10


@pytest.mark.parametrize("eta", [0.0, 0.2])
def test_entropy_advection_cancels(g32, eta):
    p = PhysParams(eta=eta)
    s = random_state(g32, p, 23)
    for ci in s.c:
        r = dg.entropy_advection_residual(ci, s.u, p, g32)
        assert abs(r) <= 1e-9 * sp.l2_norm(s.u) * sp.l2_norm(sp.gradient(ci, g32))


def test_decay_fit_exact_exponential():
    series = [(t, 3 * math.exp(-2 * t)) for t in np.linspace(0, 1, 10)]
    fit = dg.decay_fit(series)
    assert fit.rate == pytest.approx(2.0, abs=1e-9)
    assert fit.amplitude == pytest.approx(3.0, rel=1e-9)
    assert fit.r_squared == 1.0
    assert fit.window == (0.0, 1.0)


def test_decay_fit_constant_and_window():
    fit = dg.decay_fit([(t, 0.7) for t in range(10)])
    assert fit.rate == pytest.approx(0.0, abs=1e-12)
    series = [(t, 1.0 if t < 5 else math.exp(-t)) for t in range(20)]
    assert dg.decay_fit(series, window=(5, 19)).rate == pytest.approx(1.0)


def test_decay_fit_errors():
    with pytest.raises(InsufficientSamples):
        dg.decay_fit([(t, 1.0) for t in range(7)])
    with pytest.raises(InsufficientSamples):
        dg.decay_fit([(t, 1.0) for t in range(20)], window=(0, 3))
    with pytest.raises(NonPositiveSample):
        dg.decay_fit([(t, 1.0 - t / 5) for t in range(10)])


@settings(max_examples=30, deadline=None)
@given(rate=st.floats(-5, 5), amp=st.floats(1e-6, 1e6), noise_seed=st.integers(0, 1000))
def test_decay_fit_recovers_rate(rate, amp, noise_seed):
    t = np.linspace(0, 2, 30)
    y = amp * np.exp(-rate * t) * np.exp(1e-9 * np.random.default_rng(noise_seed).standard_normal(30))
    fit = dg.decay_fit(list(zip(t, y)))
    assert fit.rate == pytest.approx(rate, abs=1e-6)
    assert 0.0 <= fit.r_squared <= 1.0


def test_smallness_threshold():
    thr, ok = dg.smallness_check(PhysParams(alpha_S=0.0), [1e9])
    assert thr == math.inf and ok
    p = PhysParams(D=1, nu=1, T_star=1, k_B=1, N_A=1, alpha_S=1, smallness_C=1)
    assert dg.smallness_check(p, [0.2, 0.2]) == (0.25, True)
    assert dg.smallness_check(p, [0.3, 0.3]) == (0.25, False)
    assert dg.smallness_check(PhysParams(D=1, nu=1, alpha_S=1, smallness_C=2), [0.1])[0] == 0.125


def test_heat_rate():
    assert dg.heat_decay_rate(PhysParams(kappa=0.1)) == pytest.approx(3.947841760435743)


def test_energy_budget_is_first_order_consistent(g32):
    # calE(t + dt) - calE(t) = dt (forcing - production) + O(dt^2)
    p = PhysParams(epsilon=0.1, alpha_T=1, alpha_S=0.3, eta=0.1)
    s = random_state(g32, p, 5)
    ref = ReferenceValues.from_state(s, p)
    ef = compute_electro(s, p, g32)
    prod, forcing = dg.energy_budget_terms(s, ef, ref, p, g32)
    assert prod > 0
    e0 = dg.energy_calE(s, ef, p, g32)
    res = []
    for dt in (2e-3, 1e-3, 5e-4):
        s1 = step(s, p, g32, StepControl.fixed(dt), ref=ref)
        e1 = dg.energy_calE(s1, compute_electro(s1, p, g32), p, g32)
        res.append(abs(e1 - e0 + dt * prod - dt * forcing))
    assert res[0] / res[1] == pytest.approx(4, rel=0.1)
    assert res[1] / res[2] == pytest.approx(4, rel=0.1)


def test_record_fields(g16):
    p = PhysParams(epsilon=0.1)
    s = random_state(g16, p, 8)
    ef = compute_electro(s, p, g16)
    r = dg.make_record(s, ef, p, g16)
    assert r.time == 0.0
    assert r.energy_calE == pytest.approx(dg.energy_calE(s, ef, p, g16), rel=1e-14)
    assert r.entropy_E == pytest.approx(dg.total_entropy(s), rel=1e-14)
    assert r.min_T == pytest.approx(np.min(s.T))
    assert len(r.min_c) == 2 and len(r.conc_L1_dev) == 2
    assert r.ckp_margin >= 0 and r.temp_L2_dev > 0 and r.u_L2 > 0
