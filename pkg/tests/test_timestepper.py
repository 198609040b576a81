import math
from pathlib import Path

import numpy as np
import pytest

from npb import spectral as sp
from npb import studies
from npb.config import parse_config
from npb.errors import NumericalAbort, PicardDiverged, StateInvalid
from npb.state import (FieldIC, ICSpec, PhysParams, RandomSmooth, SingleMode, constant_state,
                       make_initial_state)
from npb.timestepper import Hook, StepControl, cfl_dt, imex_step, picard_step, run, step

from conftest import sin_mode

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def state_distance(a, b):
    return math.sqrt(sp.inner(a.c - b.c, a.c - b.c) + sp.inner(a.u - b.u, a.u - b.u)
                     + sp.inner(a.T - b.T, a.T - b.T))


def state_norm(a):
    return math.sqrt(sp.inner(a.c, a.c) + sp.inner(a.u, a.u) + sp.inner(a.T, a.T))


def small_smooth_state(g, p, seed=1, amp=0.2):
    ic = ICSpec(c=(FieldIC(1.0, (RandomSmooth(amp),)), FieldIC(1.0, (RandomSmooth(amp),))),
                T=FieldIC(1.3, (RandomSmooth(0.1),)),
                u=tuple(FieldIC(0.0, (RandomSmooth(amp),)) for _ in range(3)), seed=seed)
    return make_initial_state(ic, p, g)


def test_step_control_validation():
    with pytest.raises(ValueError):
        StepControl(dt=1e-2, dt_min=1e-3, dt_max=5e-3)
    with pytest.raises(ValueError):
        StepControl(mode="rk4")
    with pytest.raises(ValueError):
        StepControl(cfl_target=1.5)
    assert not StepControl.fixed(1e-3).adaptive
    assert StepControl().adaptive


def test_heat_mode_single_step_is_exact(g16):
    p = PhysParams(kappa=0.1, alpha_T=0, alpha_S=0)
    s = constant_state([1.0, 1.0], 1.5, g16)
    s.T = s.T + 0.1 * sin_mode(g16, (0, 0, 1))
    dt = 0.01
    for mode in ("imex_rk2", "picard"):
        out = step(s, p, g16, StepControl.fixed(dt, mode=mode))
        factor = math.exp(-4 * math.pi**2 * 0.1 * dt)
        np.testing.assert_allclose(out.T - 1.5, factor * 0.1 * sin_mode(g16, (0, 0, 1)), atol=1e-15)
        assert out.time == dt


def test_constant_state_is_a_fixed_point(g16):
    p = PhysParams(epsilon=0.1, alpha_T=1, alpha_S=1, eta=0.1)
    s = constant_state([0.7, 0.7], 1.2, g16)
    out = imex_step(s, p, g16, StepControl.fixed(5e-3))
    for a, b in ((out.c, s.c), (out.u, s.u), (out.T, s.T)):
        assert np.max(np.abs(a - b)) <= 1e-14
    out, iters = picard_step(s, p, g16, StepControl.fixed(5e-3, mode="picard"))
    assert iters == 1
    assert np.max(np.abs(out.c - s.c)) <= 1e-14 and np.max(np.abs(out.u)) <= 1e-14


@pytest.mark.parametrize("mode", ["imex_rk2", "picard"])
def test_local_error_is_third_order(mode):
    # one step of dt against two of dt/2 on the full coupled state
    cfg = parse_config(CONFIGS / "npb_full.cfg")
    p, g = cfg.params, cfg.grid
    s0 = studies.initial_state(cfg)
    ctrl = StepControl(mode=mode, picard_tol=1e-13)
    gaps = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        one = step(s0, p, g, ctrl, dt=dt)
        two = step(step(s0, p, g, ctrl, dt=dt / 2), p, g, ctrl, dt=dt / 2)
        gaps.append(state_distance(one, two))
    slope = np.polyfit(np.log([1e-2, 5e-3, 2.5e-3]), np.log(gaps), 1)[0]
    assert slope == pytest.approx(3.0, abs=0.3)


def test_picard_and_imex_agree_to_second_order(g32):
    p = PhysParams(epsilon=0.1, alpha_T=1)
    s0 = small_smooth_state(g32, p)
    gaps = []
    for dt in (2e-3, 1e-3):
        a = run(s0, p, g32, StepControl.fixed(dt), 0.02)
        b = run(s0, p, g32, StepControl.fixed(dt, mode="picard", picard_tol=1e-13), 0.02)
        gaps.append(state_distance(a, b))
    assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.15)


def test_picard_diverges_for_huge_step():
    cfg = parse_config(CONFIGS / "npb_full.cfg", {"grid.n": 16})
    s0 = studies.initial_state(cfg)
    with pytest.raises(PicardDiverged):
        picard_step(s0, cfg.params, cfg.grid, StepControl.fixed(10.0, mode="picard"))


def test_picard_reports_iteration_limit(g16):
    p = PhysParams(epsilon=0.1)
    s0 = small_smooth_state(g16, p, amp=0.4)
    with pytest.raises(PicardDiverged, match="no convergence"):
        picard_step(s0, p, g16, StepControl.fixed(1e-3, mode="picard", picard_max_iter=2,
                                                  picard_tol=1e-14))


def test_zero_horizon_returns_initial_state(g16):
    s0 = constant_state([1.0, 1.0], 1.0, g16)
    assert run(s0, PhysParams(), g16, StepControl(), 0.0) is s0


def test_heat_limit_closed_form(g16):
    p = PhysParams(kappa=0.1)
    s0 = constant_state([1.0, 1.0], 1.5, g16)
    s0.T = s0.T + 0.1 * sin_mode(g16, (0, 0, 1))
    out = run(s0, p, g16, StepControl.fixed(5e-3), 0.5)
    assert out.time == 0.5
    expected = 0.1 * math.exp(-4 * math.pi**2 * 0.1 * 0.5) / math.sqrt(2)
    assert sp.l2_norm(out.T - np.mean(out.T)) == pytest.approx(expected, rel=1e-3)


def test_conservation_over_1000_steps(g16):
    p = PhysParams(epsilon=0.1, alpha_T=1, alpha_S=0.2, eta=0.05)
    s0 = small_smooth_state(g16, p, seed=4, amp=0.4)
    out = run(s0, p, g16, StepControl.fixed(1e-3), 1.0)
    assert np.max(np.abs(out.c.mean(axis=(1, 2, 3)) - s0.c.mean(axis=(1, 2, 3)))) <= 1e-10
    assert abs(out.T.mean() - s0.T.mean()) <= 1e-10
    assert np.max(np.abs(out.u.mean(axis=(1, 2, 3)))) <= 1e-12


def test_hook_cadence_and_final_call(g16):
    s0 = constant_state([1.0, 1.0], 1.0, g16)
    seen = []
    run(s0, PhysParams(), g16, StepControl.fixed(0.01), 0.095,
        hooks=[Hook(3, lambda s, n: seen.append(n))])
    assert seen == [0, 3, 6, 9, 10]


def test_last_step_is_shortened(g16):
    s0 = constant_state([1.0, 1.0], 1.0, g16)
    times = []
    run(s0, PhysParams(), g16, StepControl.fixed(0.03), 0.1,
        hooks=[Hook(1, lambda s, n: times.append(s.time))])
    assert times[-1] == 0.1 and len(times) == 5
    assert times[-1] - times[-2] == pytest.approx(0.01)


def test_cfl_step_size(g16):
    p = PhysParams(eta=0.0)
    s = constant_state([1.0, 1.0], 1.0, g16)
    ctrl = StepControl(dt=1e-3, dt_min=1e-5, dt_max=0.1, cfl_target=0.5)
    assert cfl_dt(s, p, g16, ctrl) == 0.1
    s.u[0] = 2.0 * sin_mode(g16, (0, 1, 0))
    vmax = np.max(np.abs(s.u))
    assert cfl_dt(s, p, g16, ctrl) == pytest.approx(0.5 * (1 / 16) / vmax)
    # mollification slows the advecting field, so the step grows
    assert cfl_dt(s, PhysParams(eta=0.5), g16, ctrl) > cfl_dt(s, p, g16, ctrl)
    s.u[0] *= 1e6
    assert cfl_dt(s, p, g16, ctrl) == 1e-5


def test_adaptive_run_reaches_end_time(g16):
    p = PhysParams(epsilon=0.1)
    s0 = small_smooth_state(g16, p)
    out = run(s0, p, g16, StepControl(dt=1e-3, dt_min=1e-4, dt_max=2e-2), 0.1)
    assert out.time == 0.1


def test_abort_carries_last_valid_state(g16):
    p = PhysParams()
    steep = (SingleMode(0.99, (1, 0, 0)),)
    ic = ICSpec(c=(FieldIC(1, steep), FieldIC(1, steep)), T=FieldIC(1.0),
                u=(FieldIC(0, (SingleMode(20, (0, 1, 0)),)), FieldIC(0, (SingleMode(20, (1, 0, 0)),)),
                   FieldIC()))
    s0 = make_initial_state(ic, p, g16)
    with pytest.raises(StateInvalid) as info:
        run(s0, p, g16, StepControl.fixed(0.02), 1.0, abort_record=lambda s: ("record", s.time))
    assert isinstance(info.value, NumericalAbort)
    assert info.value.last_state is s0
    assert info.value.record == ("record", 0.0)


def test_runs_are_deterministic(g16):
    p = PhysParams(epsilon=0.1, alpha_T=1)
    s0 = small_smooth_state(g16, p, seed=9)
    a = run(s0, p, g16, StepControl.fixed(1e-3), 0.02)
    b = run(s0, p, g16, StepControl.fixed(1e-3), 0.02)
    assert a.c.tobytes() == b.c.tobytes() and a.u.tobytes() == b.u.tobytes()
