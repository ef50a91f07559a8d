# Where in lambda do positive periodic solutions exist?
#
# The delayed exponential system has F(x) = exp(-(x1+x2)) in both components.
# F(0) = 1, so F/|x| blows up at 0 and decays to 0 at infinity: one zero and one
# infinite limit. That gives one solution for every lambda. The two thresholds
# below are where the small- and large-lambda arguments each apply on their own.

from periodic_dde import classify, compute_thresholds, delayed_exp_system
from periodic_dde.config import parse_config

system = delayed_exp_system(lam=0.1, tau=0.1)
th = compute_thresholds(system)
print(f"sigma = {th.sigma:.6e}   Gamma = {th.Gamma:.6e}   chi = {th.chi:.6f}")
print(f"M(1) = {th.M_of_1:.6f}   m(1) = {th.m_of_1:.6f}")
print(f"i0 = {th.i0}, iinf = {th.iinf}")
print(f"small-lambda bound  {th.lambda_small:.6f}")
print(f"large-lambda bound  {th.lambda_large:.4f}")

for lam in (0.1, 10.0, 401.0):
    rep = classify(system.with_lambda(lam))
    print(f"lambda = {lam:>6g}: count {rep.verdict}")

# A scalar example with a finite window: f(x) = x(2+x)/(1+x) has f0 = 2,
# finf = 1 and x <= f(x) <= 2x. Pieces the theory does not decide stay "unknown".
s, _ = parse_config({"a": [0.1], "b": [1],
                     "nonlinearity": {"exprs": ["x1*(2+x1)/(1+x1)"], "c1": 1, "c2": 2}})
for iv in classify(s).intervals:
    print(iv.to_json())
