import json

import mpmath
import numpy as np
import pytest

from qfedtd.channel import ErasureSpec, identity_quantizer, uniform_quantizer
from qfedtd.errors import HorizonTooShort, InsufficientPoints
from qfedtd.federation import RunConfig, BoundConstants
from qfedtd.mrp import compute_oracles, generate_synthetic
from qfedtd.td import drift_matrix
from qfedtd.verify import (
    BoundInputs,
    bound_inputs_for_run,
    compliant_step_size,
    report_to_json,
    run_property_suite,
    speedup_regression,
    finite_time_bound,
    verify_bound_envelope,
)


def make_inputs(**overrides):
    base = dict(alpha=1e-4, omega=0.04, gamma=0.5, p=0.8, tau=5,
                sigma_noise=2.0, zeta_prime=1.0, delta0_sq=4.0, N=10, T=1000)
    base.update(overrides)
    return BoundInputs(**base)


class TestFiniteTimeBound:
    def test_vanishing_step_size_limit(self):
        # As alpha -> 0 the variance term vanishes and the contraction
        # factor tends to one, leaving exactly C1.
        b = make_inputs(alpha=1e-300, tau=1, T=2)
        c1 = b.constants.c1(b.delta0_sq, b.p, b.sigma_noise)
        assert finite_time_bound(b) == pytest.approx(c1, rel=1e-12)

    def test_hand_plug_in(self):
        # delta0 = 0, p = 1, sigma = 1: C1 = 2.
        b = make_inputs(delta0_sq=0.0, p=1.0, sigma_noise=1.0, alpha=1e-3,
                        tau=2, T=100)
        rho = 1.0 - 1e-3 * 0.04 * 0.5
        variance = (2 * 1.0 / (0.04 * 0.5)) * (5162.0 * 1e-3 / 10 + 61.0 * 1e-9)
        assert finite_time_bound(b) == pytest.approx(rho**100 * 2.0 + variance, rel=1e-14)

    def test_matches_high_precision_recompute(self, stock_model):
        mrp, phi, oracle = stock_model
        zeta_prime = 1.0
        alpha, tau = compliant_step_size(mrp, oracle, zeta_prime)
        cfg = RunConfig(N=40, T=max(2 * tau, 500), alpha=alpha,
                        quantizer=identity_quantizer(), erasure=ErasureSpec(p=1.0))
        inputs = bound_inputs_for_run(cfg, mrp, phi, oracle)
        value = finite_time_bound(inputs)
        with mpmath.workdps(60):
            a, om, g, p = map(mpmath.mpf, (inputs.alpha, inputs.omega,
                                           inputs.gamma, inputs.p))
            sig, zp = mpmath.mpf(inputs.sigma_noise), mpmath.mpf(inputs.zeta_prime)
            rho = 1 - a * om * (1 - g) * p
            c1 = 4 * mpmath.mpf(inputs.delta0_sq) + 2 * p * sig**2
            var = (inputs.tau * sig**2 / (om * (1 - g))) * (
                5162 * a * zp / inputs.N + 61 * a**3)
            ref = rho**inputs.T * c1 + var
            assert abs(value - float(ref)) <= 1e-12 * float(ref)

    def test_horizon_too_short(self):
        with pytest.raises(HorizonTooShort):
            finite_time_bound(make_inputs(tau=100, T=199))

    def test_monotone_in_distortion_and_agents(self):
        lo = finite_time_bound(make_inputs(zeta_prime=1.0))
        hi = finite_time_bound(make_inputs(zeta_prime=4.0))
        assert hi > lo
        few = finite_time_bound(make_inputs(N=2))
        many = finite_time_bound(make_inputs(N=50))
        assert many < few

    def test_monotone_in_step_size(self):
        # Within the admissible range the variance growth dominates the
        # faster contraction.
        values = [finite_time_bound(make_inputs(alpha=a)) for a in (1e-6, 1e-5, 1e-4)]
        assert values[0] < values[1] < values[2]

    def test_contraction_slackens_as_p_drops(self):
        # The rate itself is monotone in p.
        b = make_inputs()
        rho = lambda p: 1.0 - b.alpha * b.omega * (1.0 - b.gamma) * p
        assert rho(0.3) > rho(0.6) > rho(0.9)
        # Deep in the horizon the contraction term inherits the rate
        # ordering despite C1 growing with p.
        deep = {p: (rho(p) ** 10**7) * b.constants.c1(b.delta0_sq, p, b.sigma_noise)
                for p in (0.3, 0.6, 0.9)}
        assert deep[0.3] > deep[0.6] > deep[0.9]


class TestCompliantStepSize:
    def test_fixed_point_consistency(self, stock_model):
        mrp, phi, oracle = stock_model
        alpha, tau = compliant_step_size(mrp, oracle, zeta_prime=1.0)
        c = BoundConstants()
        assert alpha == pytest.approx(
            oracle.omega * (1 - mrp.gamma) / (c.C0 * tau * 1.0), rel=1e-12)
        from qfedtd.td import estimate_mixing_time
        assert estimate_mixing_time(mrp, oracle.pi, alpha**2) <= tau


class TestBoundEnvelope:
    def test_compliant_run_passes(self, stock_model):
        mrp, phi, oracle = stock_model
        alpha, tau = compliant_step_size(mrp, oracle, zeta_prime=1.0)
        cfg = RunConfig(N=10, T=max(2 * tau, 400), alpha=alpha,
                        quantizer=identity_quantizer(), erasure=ErasureSpec(p=1.0))
        report = verify_bound_envelope(cfg, mrp, phi, oracle, seeds=4)
        assert report["status"] == "PASS"
        assert report["asserted"] is True
        assert report["slack_factor"] > 1.0

    def test_horizon_too_short(self, stock_model):
        mrp, phi, oracle = stock_model
        alpha, tau = compliant_step_size(mrp, oracle, zeta_prime=1.0)
        cfg = RunConfig(N=2, T=max(1, tau // 2), alpha=alpha,
                        quantizer=identity_quantizer(), erasure=ErasureSpec(p=1.0))
        with pytest.raises(HorizonTooShort):
            verify_bound_envelope(cfg, mrp, phi, oracle, seeds=2)

    def test_centralized_reduction_holds_too(self, stock_model):
        mrp, phi, oracle = stock_model
        alpha, tau = compliant_step_size(mrp, oracle, zeta_prime=1.0)
        cfg = RunConfig(N=1, T=max(2 * tau, 200), alpha=alpha,
                        quantizer=identity_quantizer(), erasure=ErasureSpec(p=1.0))
        report = verify_bound_envelope(cfg, mrp, phi, oracle, seeds=4)
        assert report["status"] == "PASS"

    def test_noncompliant_alpha_is_advisory(self, stock_model):
        mrp, phi, oracle = stock_model
        cfg = RunConfig(N=4, T=500, alpha=0.6, quantizer=identity_quantizer(),
                        erasure=ErasureSpec(p=1.0))
        report = verify_bound_envelope(cfg, mrp, phi, oracle, seeds=2)
        assert report["status"] == "ADVISORY"
        assert report["asserted"] is False


class TestSpeedupRegression:
    def test_exact_inverse_law(self):
        pts = [(n, 3.7 / n) for n in (1, 5, 10, 20, 40)]
        assert speedup_regression(pts) == pytest.approx(-1.0, abs=1e-12)

    def test_flat_plateaus(self):
        pts = [(n, 0.25) for n in (1, 5, 10, 20)]
        assert speedup_regression(pts) == pytest.approx(0.0, abs=1e-12)

    def test_insufficient_points(self):
        with pytest.raises(InsufficientPoints):
            speedup_regression([(1, 1.0), (2, 0.5), (4, 0.25)])
        with pytest.raises(InsufficientPoints):
            speedup_regression([(2, 1.0)] * 5)


class TestPropertySuite:
    def test_all_pass_on_stock_model(self, stock_model):
        mrp, phi, oracle = stock_model
        report = run_property_suite(mrp, phi, oracle, trials=2000, seed=3)
        assert all(entry["status"] == "PASS" for entry in report)
        names = {entry["property"] for entry in report}
        assert "drift-condition" in names
        assert "two-lipschitz" in names
        assert "direction-norm-bound" in names
        assert any(name.startswith("quantizer-unbiased") for name in names)

    def test_sign_flip_mutation_fails_drift(self, stock_model):
        mrp, phi, oracle = stock_model
        A, b = drift_matrix(mrp, phi, oracle.pi)
        flipped = lambda thetas: -(b[None, :] - thetas @ A.T)
        report = run_property_suite(mrp, phi, oracle, trials=2000, seed=3,
                                    gbar_fn=flipped)
        by_name = {e["property"]: e for e in report}
        assert by_name["drift-condition"]["status"] == "FAIL"
        # The untouched properties still pass.
        assert by_name["two-lipschitz"]["status"] == "PASS"

    def test_strong_discount_model_still_lipschitz(self):
        mrp, phi = generate_synthetic(12, 6, 0.99, seed=2)
        oracle = compute_oracles(mrp, phi)
        report = run_property_suite(mrp, phi, oracle, trials=2000, seed=5)
        by_name = {e["property"]: e for e in report}
        assert by_name["two-lipschitz"]["status"] == "PASS"

    def test_report_serializes(self, stock_model):
        mrp, phi, oracle = stock_model
        report = run_property_suite(mrp, phi, oracle, trials=500, seed=1,
                                    quantizer_specs=[uniform_quantizer(3, phi.m)])
        parsed = json.loads(report_to_json(report))
        assert all({"property", "status", "worst_slack", "trials"} <= set(e)
                   for e in parsed)
