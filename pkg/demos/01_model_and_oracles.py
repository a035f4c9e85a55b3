"""Build the stock synthetic model and inspect every exact oracle.

The model is a 20-state ergodic chain with rewards in [0, 1) and 10
orthonormal feature columns.  Everything below is computed in closed
form: no sampling involved.
"""

import numpy as np

from qfedtd import (
    compute_oracles,
    estimate_mixing_time,
    generate_synthetic,
    load_model,
    save_model,
    steady_state_direction,
    true_value_function,
)

mrp, phi = generate_synthetic(n=20, m=10, gamma=0.5, seed=7)
oracle = compute_oracles(mrp, phi)

print("states:", mrp.n, " features:", phi.m, " discount:", mrp.gamma)
print("stationary distribution (min/max):",
      oracle.pi.min().round(4), oracle.pi.max().round(4))
print("smallest feature eigenvalue omega:", round(oracle.omega, 6))
print("fixed point theta*:", np.round(oracle.theta_star, 4))
print("noise scale sigma = max(1, r_bar, ||theta*||):", round(oracle.sigma_noise, 4))

# The steady-state update direction vanishes exactly at the fixed point.
print("||gbar(theta*)|| =",
      np.linalg.norm(steady_state_direction(oracle.theta_star, oracle, mrp, phi)))

# The value function the features approximate.
V = true_value_function(mrp)
approx = phi.Phi @ oracle.theta_star
print("value range:", V.min().round(4), "to", V.max().round(4))
print("max |V - Phi theta*| (approximation gap):", np.abs(V - approx).max().round(4))

# Chain-level mixing: iterations until every row of P^k is within
# total-variation epsilon of pi.
for eps in (1e-2, 1e-4, 1e-8):
    print(f"mixing time at epsilon={eps:g}: {estimate_mixing_time(mrp, oracle.pi, eps)}")

# Models round-trip exactly through JSON.
save_model("/tmp/qfedtd_demo_model.json", mrp, phi)
mrp2, phi2 = load_model("/tmp/qfedtd_demo_model.json")
print("JSON round trip exact:",
      np.array_equal(mrp2.P, mrp.P) and np.array_equal(phi2.Phi, phi.Phi))
