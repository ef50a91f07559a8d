import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import lambertw

from periodic_dde.existence import compute_sigma
from periodic_dde.model import DelaySystem, Nonlinearity
from periodic_dde.operator import (PeriodicTrajectory, apply_T, cone_membership, evaluate_T,
                                   green_kernel, kernel_bounds, operator_bound_checks,
                                   random_cone_element, residual_ode, solve_fixed_point)
from periodic_dde.periodic import PeriodicFn, QuadratureRule
from periodic_dde.scenarios import delayed_exp_system


def _wiggle(omega=1.0, m=256):
    return PeriodicTrajectory.from_function(
        lambda t: np.stack([0.05 + 0.02 * np.sin(2 * np.pi * t), 0.04 + 0.01 * np.cos(4 * np.pi * t)], -1),
        omega, m)


def test_trajectory_closure_and_readonly():
    with pytest.raises(ValueError, match="closed"):
        PeriodicTrajectory(1.0, np.array([[0.0], [1.0], [2.0]]))
    x = _wiggle()
    with pytest.raises(ValueError):
        x.values[0, 0] = 1.0
    assert x.n == 2 and x.m == 256
    assert x.norm() == pytest.approx(0.07 + 0.05, rel=1e-4)


def test_trajectory_interpolation_accuracy():
    x = _wiggle()
    t = np.linspace(-1.3, 2.7, 97)
    ref = np.stack([0.05 + 0.02 * np.sin(2 * np.pi * t), 0.04 + 0.01 * np.cos(4 * np.pi * t)], -1)
    assert np.max(np.abs(x(t) - ref)) < 1e-9
    lin = PeriodicTrajectory(1.0, x.values, "linear")
    assert np.max(np.abs(lin(t) - ref)) < 1e-5
    assert x.resample(64).m == 64


def test_green_kernel_constant_coefficient():
    a = 0.7
    s_ = DelaySystem((PeriodicFn.constant(a, 2.0),), (PeriodicFn.constant(1.0, 2.0),),
                     Nonlinearity(lambda x: x, 1), PeriodicFn.constant(0.0, 2.0), 2.0)
    t, s = 0.3, 1.9
    assert green_kernel(s_, 0, t, s) == pytest.approx(math.exp(a * (s - t)) / math.expm1(2 * a), rel=1e-13)


def test_kernel_bounds_hold(exp_small):
    lo_hi = kernel_bounds(exp_small)
    rng = np.random.default_rng(0)
    t = rng.uniform(0, 1, 500)
    s = t + rng.uniform(0, 1, 500)
    for i in range(2):
        G = green_kernel(exp_small, i, t, s)
        assert np.all(G >= lo_hi[i, 0] * (1 - 1e-12))
        assert np.all(G <= lo_hi[i, 1] * (1 + 1e-12))


def test_evaluate_T_against_adaptive_quadrature(exp_small):
    x = _wiggle()
    a = [lambda s: 5 * s + (1 - np.cos(2 * np.pi * s)) / (2 * np.pi),
         lambda s: 5 * s + np.sin(2 * np.pi * s) / (2 * np.pi)]
    b = [lambda s: 1 + 0.6 * np.cos(2 * np.pi * s), lambda s: 1 + 0.5 * np.sin(2 * np.pi * s)]
    lam, tau = 0.1, 0.1
    for t in (0.0, 0.37, 0.81):
        got = evaluate_T(exp_small, x, [t])[0]
        for i in range(2):
            def integrand(s, i=i):
                xd = x(s - tau)
                return math.exp(a[i](s) - a[i](t)) * b[i](s) * math.exp(-float(np.sum(xd)))
            ref = lam * quad(integrand, t, t + 1, epsabs=1e-14, epsrel=1e-13, limit=200)[0] / math.expm1(5.0)
            assert got[i] == pytest.approx(ref, rel=1e-9)


def test_fast_path_matches_reference(exp_small):
    x = _wiggle()
    fast = apply_T(exp_small, x)
    ref = evaluate_T(exp_small, x, x.grid)
    assert np.max(np.abs(fast.values - ref)) < 1e-13
    gl = apply_T(exp_small, x, QuadratureRule("gauss-legendre-panels", 64, 5))
    assert np.max(np.abs(gl.values - ref)) < 1e-9


def test_T_output_is_periodic(exp_small):
    x = _wiggle()
    t = np.linspace(0, 1, 7)
    assert np.allclose(evaluate_T(exp_small, x, t), evaluate_T(exp_small, x, t + 1.0), atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.05, 20.0))
def test_cone_invariance(seed, r):
    s = delayed_exp_system(401.0, 0.1)
    sig_i, _ = compute_sigma(s)
    x = random_cone_element(sig_i, r, 1.0, np.random.default_rng(seed))
    assert cone_membership(x, sig_i, tol=1e-12)[0]
    assert x.norm() == pytest.approx(r, rel=1e-12)
    assert cone_membership(apply_T(s, x), sig_i, tol=1e-10)[0]


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 100.0))
def test_T_linear_in_lambda(lam):
    base = delayed_exp_system(1.0, 0.1)
    x = _wiggle()
    assert np.allclose(apply_T(base.with_lambda(lam), x).values, lam * apply_T(base, x).values,
                       rtol=1e-13, atol=0)


def test_bound_checks_pass(exp_small):
    rep = operator_bound_checks(exp_small, 1.0, samples=20, seed=3)
    assert rep.ok, rep.to_json()
    assert rep.lower == pytest.approx(0.1 * math.exp(-1) / (math.exp(5) - 1), rel=1e-9)


def test_constant_coefficient_fixed_point_is_omega_constant():
    # x' = -x + e^{-x}: constant periodic solution x = W(1)
    one = PeriodicFn.constant(1.0, 1.0)
    s = DelaySystem((one,), (one,), Nonlinearity(lambda x: np.exp(-x), 1),
                    PeriodicFn.constant(0.3, 1.0), 1.0)
    res = solve_fixed_point(s, tol=1e-13)
    assert res.converged
    assert np.max(np.abs(res.solution.values - lambertw(1.0).real)) < 1e-12


def test_fixed_point_small_lambda(fp_small, exp_small):
    assert fp_small.converged and fp_small.cone_ok
    assert fp_small.residual_operator < 1e-10
    assert residual_ode(exp_small, fp_small.solution) < 1e-4
    # Picard alone converges here and agrees with the default path
    pic = solve_fixed_point(exp_small, method="picard")
    assert pic.converged
    assert np.max(np.abs(pic.solution.values - fp_small.solution.values)) < 1e-9


def test_fixed_point_large_lambda(fp_large, exp_large):
    assert fp_large.converged and fp_large.cone_ok
    assert residual_ode(exp_large, fp_large.solution) < 1e-4


def test_solver_argument_errors(exp_small):
    with pytest.raises(ValueError):
        solve_fixed_point(exp_small, PeriodicTrajectory.constant([-1.0, 0.1], 1.0))
    with pytest.raises(ValueError):
        solve_fixed_point(exp_small, method="anderson")
    with pytest.raises(ValueError):
        solve_fixed_point(exp_small, damping=0.0)


def test_picard_alone_stalls_at_large_lambda(exp_large):
    res = solve_fixed_point(exp_large, method="picard", max_iter=300)
    assert not res.converged
