# Stability certificates about the computed orbits.
#
# With K_L = 2 the contraction integral alpha is well below 1 at lambda = 0.1.
# At lambda = 401 alpha is about 221, so the criterion says nothing, even though
# simulations still converge (see demo 04).

import dataclasses

from periodic_dde import certify, delayed_exp_system, solve_fixed_point

for lam in (0.1, 401.0):
    system = delayed_exp_system(lam, 0.1)
    orbit = solve_fixed_point(system).solution
    cert = certify(system, orbit, K_L=2.0)
    print(f"lambda = {lam:g}: alpha = {cert.alpha:.4f}, verdict {cert.verdict}")

# Without a declared constant the Lipschitz bound is sampled, and the
# certificate is marked heuristic.
system = delayed_exp_system(0.1, 0.1)
system = dataclasses.replace(system, F=system.F.replace(lipschitz=None))
cert = certify(system, solve_fixed_point(system).solution)
print(cert.K_L_provenance, round(cert.K_L, 4), cert.heuristic)
