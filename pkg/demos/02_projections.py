"""KL projections of a law onto EVaR half-spaces.

``kl_inf_upper(eta, nu)`` is the cheapest way (in KL) to move ``eta`` to a
law with EVaR at least ``nu``; ``kl_inf_lower`` the cheapest way down to EVaR
at most ``nu``. Both report a primal minimizer, which we check directly.
"""

import numpy as np

from evarbai import DiscreteDistribution, evar, kl_divergence, kl_inf_lower, kl_inf_upper

alpha = 0.2
eta = DiscreteDistribution([0.0, 0.3, 1.0], [0.4, 0.4, 0.2])
e = evar(eta, alpha).value
print(f"eta = {eta}, EVaR {e:.5f}")

print("\nraising the EVaR")
for nu in np.linspace(e, 1.0, 5)[1:]:
    sol = kl_inf_upper(eta, nu, alpha)
    print(f"  nu {nu:.3f}: KL_inf {sol.value:.6f}, KL(eta||kappa) "
          f"{kl_divergence(eta, sol.primal):.6f}, EVaR(kappa) {evar(sol.primal, alpha).value:.5f}")

print("\nlowering the EVaR")
for nu in np.linspace(0.05, e, 5)[:-1]:
    sol = kl_inf_lower(eta, nu, alpha)
    print(f"  nu {nu:.3f}: KL_inf {sol.value:.6f}, EVaR(kappa) "
          f"{evar(sol.primal, alpha).value:.5f}, kappa {sol.primal}")
