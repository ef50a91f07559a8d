import math

import numpy as np
import pytest

from periodic_dde.model import DelaySystem, Nonlinearity
from periodic_dde.operator import PeriodicTrajectory
from periodic_dde.periodic import PeriodicFn
from periodic_dde.scenarios import delayed_exp_system, feedback_system
from periodic_dde.simulator import (HistoryFn, HistoryUnderflow, SimulationRun, detect_periodic,
                                    measure_orbit, simulate, trajectories_merge)


def _linear(a, b, tau, lam=1.0):
    return DelaySystem((PeriodicFn.constant(a, 1.0),), (PeriodicFn.constant(b, 1.0),),
                       Nonlinearity(lambda x: x, 1), PeriodicFn.constant(tau, 1.0), 1.0, lam)


def test_plain_ode_decay():
    run = simulate(_linear(1.0, 0.0, 0.0), HistoryFn.constant([1.0]), 1.0, 1e-3)
    assert run.states[-1, 0] == pytest.approx(math.exp(-1), abs=1e-10)
    assert run.t_end == pytest.approx(1.0)


def test_method_of_steps_closed_form():
    # x'(t) = -x(t-1), history 1: 1-t, then 1-t+(t-1)^2/2, then x(3) = -1/6
    run = simulate(_linear(0.0, -1.0, 1.0), HistoryFn.constant([1.0], 1.0), 3.0, 0.01)
    t = np.array([0.5, 1.0, 1.5, 2.0])
    exact = np.where(t <= 1, 1 - t, 1 - t + (t - 1) ** 2 / 2)
    assert np.max(np.abs(run(t)[:, 0] - exact)) < 1e-13
    assert run.states[-1, 0] == pytest.approx(-1 / 6, abs=1e-13)


def test_rk4_order_delay_free():
    errs = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        run = simulate(_linear(2.0, 0.0, 0.0), HistoryFn.constant([1.0]), 1.0, dt)
        errs.append(abs(run.states[-1, 0] - math.exp(-2)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 4.0) < 0.3), orders


def test_dense_output_between_steps():
    run = simulate(_linear(1.0, 0.0, 0.0), HistoryFn.constant([1.0]), 1.0, 1e-2)
    t = np.linspace(0, 1, 37)
    assert np.max(np.abs(run(t)[:, 0] - np.exp(-t))) < 1e-9


def test_step_must_divide_delay():
    s = delayed_exp_system(0.1, 0.1)
    with pytest.raises(ValueError, match="tau/k"):
        simulate(s, HistoryFn.constant([0.1, 0.1], 0.1), 1.0, 0.003)
    with pytest.raises(ValueError, match="tau/k"):
        simulate(s, HistoryFn.constant([0.1, 0.1], 0.1), 1.0, 0.02)


def test_history_underflow():
    s = delayed_exp_system(0.1, 0.1)
    short = HistoryFn(lambda u: np.array([0.1, 0.1]), 0.05)
    with pytest.raises(HistoryUnderflow):
        simulate(s, short, 1.0, 1e-3)


def test_time_varying_delay_runs():
    s = delayed_exp_system(0.1).with_tau(PeriodicFn.from_expr("0.5+0.25*sin(2*pi*t)", 1.0))
    run = simulate(s, HistoryFn.constant([0.02, 0.08], 0.75), 10.0, 0.01)
    assert not run.blew_up
    assert np.all(np.isfinite(run.states))


def test_blowup_is_flagged():
    run = simulate(_linear(-50.0, 0.0, 0.0), HistoryFn.constant([1.0]), 2.0, 1e-3)
    assert run.blew_up
    assert run.t_end < 1.0
    rep = trajectories_merge(_linear(-50.0, 0.0, 0.0), [HistoryFn.constant([1.0]), HistoryFn.constant([2.0])],
                             2.0, 1e-3)
    assert not rep.merged and "blew up" in rep.diagnosis


def _synthetic_run(func, dfunc, t_end=10.0, dt=1e-3):
    t = np.arange(int(round(t_end / dt)) + 1) * dt
    return SimulationRun(t, func(t)[:, None], dfunc(t)[:, None], dt, HistoryFn.constant([0.0]))


def test_detect_periodic_exact_and_geometric():
    p = lambda t: np.cos(2 * np.pi * t)
    dp = lambda t: -2 * np.pi * np.sin(2 * np.pi * t)
    rep = detect_periodic(_synthetic_run(p, dp), 1.0)
    assert np.max(rep.distances) < 1e-12 and rep.converged
    f = lambda t: np.exp(-t) * np.sin(2 * np.pi * t) + p(t)
    df = lambda t: np.exp(-t) * (2 * np.pi * np.cos(2 * np.pi * t) - np.sin(2 * np.pi * t)) + dp(t)
    d = detect_periodic(_synthetic_run(f, df), 1.0).distances
    ratios = d[1:] / d[:-1]
    assert np.allclose(ratios, math.exp(-1), rtol=0.1)


def test_detect_periodic_needs_five_periods():
    run = _synthetic_run(np.sin, np.cos, t_end=3.0)
    with pytest.raises(ValueError, match="at least 5"):
        detect_periodic(run, 1.0)


def test_feedback_system_settles():
    s = feedback_system("negative-feedback", 0.2, 2.0, 0.02, 0.02)
    run = simulate(s, HistoryFn.constant([0.02, 0.08]), 30.0)
    rep = detect_periodic(run, 1.0)
    assert rep.converged and rep.distances[-1] < 1e-6


def test_merge_small_lambda_and_identical():
    s = delayed_exp_system(0.1, 0.1)
    hs = [HistoryFn.constant([0.02, 0.08], 0.1), HistoryFn.constant([0.07, 0.01], 0.1)]
    rep = trajectories_merge(s, hs, 40.0)
    assert rep.merged and rep.final_distance < 1e-4 and rep.merge_time > 0
    same = trajectories_merge(s, [hs[0], hs[0]], 6.0)
    assert same.merged and same.merge_time == 0.0
    with pytest.raises(ValueError):
        trajectories_merge(s, hs[:1], 6.0)


def test_measure_sine_and_flat():
    sine = PeriodicTrajectory.from_function(lambda t: np.sin(2 * np.pi * t), 1.0, 256)
    m = measure_orbit(sine)
    assert m.amplitude[0] == pytest.approx(2.0, abs=1e-12)
    assert abs(m.period - 1.0) <= m.resolution
    flat = measure_orbit(PeriodicTrajectory.constant([0.3], 1.0))
    assert flat.period is None


def test_positivity_and_consistency_with_fixed_point(fp_small, exp_small, fp_large, exp_large):
    for sys_, fp in ((exp_small, fp_small), (exp_large, fp_large)):
        x = fp.solution
        run = simulate(sys_, HistoryFn.from_trajectory(x, 0.1), 6.0, 1e-3)
        assert np.min(run.states) >= -1e-9
        dev = np.max(np.abs(run.states - x(run.times)))
        assert dev < 1e-5, dev
        assert detect_periodic(run, 1.0).distances[0] < 1e-5


def test_positivity_from_constant_histories():
    for lam, h in ((0.1, [0.07, 0.01]), (401.0, [3.0, 2.0])):
        run = simulate(delayed_exp_system(lam, 0.1), HistoryFn.constant(h, 0.1), 10.0)
        assert np.min(run.states) >= -1e-9


def test_deterministic():
    s = delayed_exp_system(401.0, 0.1)
    a = simulate(s, HistoryFn.constant([1.0, 4.0], 0.1), 5.0)
    b = simulate(s, HistoryFn.constant([1.0, 4.0], 0.1), 5.0)
    assert np.array_equal(a.states, b.states)
