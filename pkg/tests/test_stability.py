import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from periodic_dde.model import DelaySystem, HypothesisError, Nonlinearity
from periodic_dde.periodic import PeriodicFn
from periodic_dde.scenarios import delayed_exp_system, feedback_system, nonlinearity
from periodic_dde.stability import (NotLipschitz, certify, check_H3, check_H6, compute_alpha,
                                    estimate_lipschitz, shifted_nonlinearity, shifted_system)
from periodic_dde.operator import solve_fixed_point


def _scalar(a, b, F=None, n=1):
    a = PeriodicFn.from_expr(a, 1.0) if isinstance(a, str) else PeriodicFn.constant(a, 1.0)
    b = PeriodicFn.from_expr(b, 1.0) if isinstance(b, str) else PeriodicFn.constant(b, 1.0)
    F = F or Nonlinearity(lambda x: 0.5 * x, 1)
    return DelaySystem((a,), (b,), F, PeriodicFn.constant(0.0, 1.0), 1.0)


@pytest.mark.parametrize("a,ok", [(5.0, True), ("sin(2*pi*t)", False), ("-1+0.5*sin(2*pi*t)", False)])
def test_h3(a, ok):
    assert check_H3(_scalar(a, 1.0)) == [ok]


def test_h6_only_for_zero_mean():
    assert check_H6(_scalar("sin(2*pi*t)", 1.0)) == [True]
    assert check_H6(_scalar("-1+0.5*sin(2*pi*t)", 1.0)) == [False]
    assert check_H6(_scalar(5.0, 1.0)) == [False]


@pytest.mark.parametrize("a,b,K", [(3.0, 0.4, 2.0), (5.0, 1.0, 1.0), (10.0, 2.5, 0.3)])
def test_alpha_constant_coefficients(a, b, K):
    res = compute_alpha(_scalar(a, b), K, 0)
    assert res.stabilized
    assert res.value == pytest.approx(K * b / a, rel=1e-10)


def test_alpha_doubles_exactly_with_K():
    s = delayed_exp_system(0.1, 0.1)
    assert compute_alpha(s, 4.0, 0).value == 2 * compute_alpha(s, 2.0, 0).value


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(1.0, 4.0))
def test_alpha_monotone_in_scaling(K, scale):
    s = delayed_exp_system(0.1, 0.1)
    base = compute_alpha(s, K, 1).value
    assert compute_alpha(s, K * scale, 1).value >= base
    assert compute_alpha(s.with_lambda(0.1 * scale), K, 1).value >= base * (1 - 1e-12)


def test_alpha_slow_decay_warns():
    with pytest.warns(RuntimeWarning, match="not stabilized"):
        res = compute_alpha(_scalar(0.01, 1.0), 1.0, 0)
    assert not res.stabilized


def _alpha_oracle(lam, i, K=2.0):
    A = [lambda s: 5 * s + (1 - np.cos(2 * np.pi * s)) / (2 * np.pi),
         lambda s: 5 * s + np.sin(2 * np.pi * s) / (2 * np.pi)][i]
    b = [lambda s: 1 + 0.6 * np.cos(2 * np.pi * s), lambda s: 1 + 0.5 * np.sin(2 * np.pi * s)][i]
    best = 0.0
    for t in 9.0 + np.arange(257) / 256:
        val = quad(lambda s: math.exp(-(A(t) - A(s))) * abs(lam * b(s)), t - 9.0, t,
                   epsabs=1e-15, epsrel=1e-13, limit=400)[0]
        best = max(best, val)
    return K * best


@pytest.mark.parametrize("lam", [0.1, 401.0])
def test_alpha_delayed_exp_against_oracle(lam):
    s = delayed_exp_system(lam, 0.1)
    for i in range(2):
        got = compute_alpha(s, 2.0, i).value
        assert got == pytest.approx(_alpha_oracle(lam, i), rel=1e-9)
    if lam < 1:
        assert got < 1
    else:
        assert got > 1


def test_lipschitz_exponential():
    F = nonlinearity("delayed-exp").replace(lipschitz=None)
    for L in (0.1, 1.0, 5.0):
        est = estimate_lipschitz(F, L)
        assert est.provenance == "estimated"
        # finite differences at 1e-8 scale carry ~1e-7 relative round-off
        assert 1.8 <= est.value <= 2 * 1.1 * (1 + 1e-6)


def test_lipschitz_declared_wins():
    est = estimate_lipschitz(nonlinearity("delayed-exp"), 1.0)
    assert (est.value, est.provenance) == (2.0, "declared")


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_lipschitz_linear(c):
    est = estimate_lipschitz(Nonlinearity(lambda x: c * x, 2), 1.0)
    # tiny perturbations leave ~1e-8 relative cancellation error
    assert est.raw == pytest.approx(c, rel=1e-7)
    assert est.value == pytest.approx(1.1 * c, rel=1e-7)


def test_lipschitz_negative_feedback_bound():
    s = feedback_system("negative-feedback", 0.2, 2.0, 0.02, 0.02)
    x_star = solve_fixed_point(s).solution
    theta, L = 0.02, 2 * x_star.norm()
    y_hat = float(np.max(x_star.values[:, 1]))
    bound = max((2 * L + 2 * y_hat) / theta ** 2, math.exp(L))
    G = shifted_system(s, x_star).G
    est = estimate_lipschitz(G, L, omega=1.0)
    assert est.value <= 1.1 * bound


def test_not_lipschitz():
    with pytest.raises(NotLipschitz):
        estimate_lipschitz(Nonlinearity(lambda x: np.sqrt(np.abs(x)) * 1e5, 1), 1.0)


def test_shifted_nonlinearity(fp_small, exp_small):
    G = shifted_system(exp_small, fp_small.solution).G
    t = np.linspace(0, 1, 33)
    assert np.all(G(np.zeros((33, 2)), t) == 0.0)


def test_shifted_matches_displayed_negative_feedback_formula():
    theta = 0.5
    s = feedback_system("negative-feedback", 5.0, 4.0, 1.2, theta)
    x_star = solve_fixed_point(s).solution
    G = shifted_nonlinearity(s.F, x_star, s.tau)
    rng = np.random.default_rng(1)
    t = rng.uniform(0, 1, 40)
    y = rng.uniform(0, 0.3, (40, 2))
    xs = x_star(t)
    ref1 = theta ** 2 / (theta ** 2 + (y[:, 1] + xs[:, 1]) ** 2) - theta ** 2 / (theta ** 2 + xs[:, 1] ** 2)
    ref2 = np.exp(-(y.sum(1) + xs.sum(1))) - np.exp(-xs.sum(1))
    out = G(y, t)
    assert np.allclose(out[:, 0], ref1, atol=1e-15)
    assert np.allclose(out[:, 1], ref2, atol=1e-15)


def test_shift_cancels_for_linear_F(fp_small, exp_small):
    F = Nonlinearity(lambda x: 3.0 * x, 2)
    G = shifted_nonlinearity(F, fp_small.solution, exp_small.tau)
    y = np.random.default_rng(2).uniform(-1, 1, (20, 2))
    t = np.linspace(0, 1, 20)
    assert np.allclose(G(y, t), F(y), atol=1e-14)


def test_certify_delayed_exp(fp_small, fp_large, exp_small, exp_large):
    c = certify(exp_small, fp_small.solution, K_L=2.0)
    assert c.alpha < 1 and c.verdict == "asymptotically-stable" and not c.heuristic
    c = certify(exp_large, fp_large.solution, K_L=2.0)
    assert c.alpha > 1 and c.verdict == "criteria-inconclusive"


def test_certify_paths_identical(fp_small, exp_small):
    a = certify(exp_small, fp_small.solution)
    b = certify(shifted_system(exp_small, fp_small.solution))
    assert a == b
    assert a.to_json() == b.to_json()
    assert a.K_L_provenance == "declared" and a.L == 2 * fp_small.solution.norm()


def test_certify_estimated_is_heuristic(fp_small, exp_small):
    s = exp_small.__class__(exp_small.a, exp_small.b, exp_small.F.replace(lipschitz=None),
                            exp_small.tau, exp_small.omega, exp_small.lam)
    c = certify(s, fp_small.solution)
    assert c.heuristic and c.K_L_provenance == "estimated"
    assert c.verdict == "asymptotically-stable"


def test_certify_degenerate_zero_integral():
    zero = Nonlinearity(lambda x: 0.0 * x, 1)
    c = certify(_scalar(0.0, 0.0, zero))
    assert c.h3 == (False,) and c.h6 == (True,)
    assert c.verdict == "necessarily-unstable-zero-integral"


def test_certify_zero_solution_requires_F0_zero(exp_small):
    with pytest.raises(HypothesisError):
        certify(exp_small)


def test_certify_zero_solution_linear():
    c = certify(_scalar(5.0, 1.0), K_L=0.5)
    assert c.alpha == pytest.approx(0.5 / 5.0, rel=1e-10)
    assert c.verdict == "asymptotically-stable" and c.about == "zero-solution"


def test_certificate_json(fp_small, exp_small):
    js = certify(exp_small, fp_small.solution, K_L=2.0).to_json()
    for key in ("alpha_i", "alpha", "h3_ok", "h5_ok", "h6", "verdict", "K_L", "K_L_provenance", "heuristic"):
        assert key in js
