"""Evaluate the finite-time bound and the horizon-matched schedule.

At the conservative step-size ceiling the measured terminal error sits
below the closed-form bound (the universal constants make it loose by
design).  The horizon-matched schedule shrinks the step size as
log(NT)/T, which is what yields the 1/(NT) error scaling.
"""

from qfedtd import ErasureSpec, RunConfig, horizon_matched_schedule, identity_quantizer
from qfedtd.experiments import default_model
from qfedtd.verify import (
    bound_inputs_for_run,
    compliant_step_size,
    finite_time_bound,
    verify_bound_envelope,
)

mrp, phi, oracle = default_model()

alpha, tau = compliant_step_size(mrp, oracle, zeta_prime=1.0)
print(f"step-size ceiling: {alpha:.3e}   mixing time at alpha^2: {tau}")

cfg = RunConfig(N=10, T=max(2 * tau, 400), alpha=alpha,
                quantizer=identity_quantizer(), erasure=ErasureSpec(p=1.0))
inputs = bound_inputs_for_run(cfg, mrp, phi, oracle)
print(f"bound value at T={cfg.T}: {finite_time_bound(inputs):.4f}")

report = verify_bound_envelope(cfg, mrp, phi, oracle, seeds=8)
print(f"measured mean squared error: {report['mean_delta_sq']:.4f} "
      f"-> {report['status']} (slack factor {report['slack_factor']:.2f})")

print()
print("horizon-matched schedule alpha = log(NT) / (omega (1-gamma) p T):")
for T in (10_000, 100_000, 1_000_000):
    a = horizon_matched_schedule(N=40, T=T, omega=oracle.omega, gamma=mrp.gamma, p=0.6)
    print(f"  T={T:>9,}: alpha = {a:.6f}")
