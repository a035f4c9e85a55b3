import logging
import math

import mpmath
import numpy as np
import pytest

from qfedtd import streams
from qfedtd.channel import ErasureSpec, identity_quantizer, uniform_quantizer
from qfedtd.errors import Divergence
from qfedtd.federation import (
    ChannelStreams,
    ConstantStep,
    HorizonMatchedStep,
    RunConfig,
    BoundConstants,
    _round,
    horizon_matched_schedule,
    qfedtd_step,
    resolve_step_size,
    run_qfedtd,
)
from qfedtd.mrp import FeatureMatrix, compute_oracles, validate_mrp
from qfedtd.td import make_agents, steady_state_direction
from reference import reference_td0


def lossless_cfg(N, T, alpha=0.1, seed=0):
    return RunConfig(N=N, T=T, alpha=alpha, quantizer=identity_quantizer(),
                     erasure=ErasureSpec(p=1.0), master_seed=seed)


class TestRunConfig:
    def test_float_alpha_normalized(self):
        cfg = lossless_cfg(1, 1, alpha=0.5)
        assert cfg.alpha == ConstantStep(0.5)

    def test_invalid(self):
        with pytest.raises(ValueError):
            lossless_cfg(0, 10)
        with pytest.raises(ValueError):
            lossless_cfg(1, 0)
        with pytest.raises(ValueError):
            lossless_cfg(1, 1, alpha=-0.1)


class TestQfedtdStep:
    def test_single_agent_lossless_is_one_td0_step(self, stock_model):
        mrp, phi, oracle = stock_model
        cfg = lossless_cfg(1, 1, alpha=0.3, seed=5)
        agents = make_agents(1, 5)
        theta0 = np.zeros(phi.m)
        theta1, agents = qfedtd_step(theta0, agents, cfg, mrp, phi,
                                     ChannelStreams.for_config(cfg))
        ref = reference_td0(mrp, phi, 0.3, 1, 5, oracle.theta_star)
        assert ((theta1 - oracle.theta_star) ** 2).sum() == ref[1]

    def test_all_erased_keeps_theta(self, stock_model):
        # Forced all-zero mask through the round kernel.
        mrp, phi, _ = stock_model
        cfg = RunConfig(N=4, T=1, alpha=0.5, quantizer=identity_quantizer(),
                        erasure=ErasureSpec(p=0.5), master_seed=0)
        theta = np.arange(phi.m, dtype=np.float64)
        cum = np.cumsum(mrp.P, axis=1)
        theta_next, _ = _round(theta, np.zeros(4, dtype=np.intp),
                               np.full(4, 0.5), None, np.ones(4),
                               cum, mrp.R, phi.Phi, mrp.gamma, 0.5, cfg, None)
        assert np.array_equal(theta_next, theta)

    def test_two_agents_hand_arithmetic(self, two_state):
        mrp, phi, oracle = two_state
        cfg = lossless_cfg(2, 1, alpha=0.25, seed=11)
        agents = make_agents(2, 11)
        theta0 = np.array([0.2, -0.4])
        theta1, agents = qfedtd_step(theta0.copy(), agents, cfg, mrp, phi,
                                     ChannelStreams.for_config(cfg))
        # Hand evaluation: replay each agent's observed transition and
        # apply the one-step formula per agent.
        gs = []
        for i, agent in enumerate(agents):
            s_next = agent.current_state
            s = 0
            err = (mrp.R[s] + mrp.gamma * phi.Phi[s_next] @ theta0
                   - phi.Phi[s] @ theta0)
            gs.append(err * phi.Phi[s])
        expected = theta0 + 0.25 * (gs[0] + gs[1]) / 2.0
        np.testing.assert_allclose(theta1, expected, atol=1e-15)

    def test_divergence_guard(self, stock_model):
        mrp, phi, _ = stock_model
        cfg = lossless_cfg(1, 1, alpha=1.0)
        agents = make_agents(1, 0)
        with pytest.raises(Divergence):
            qfedtd_step(np.full(phi.m, 2e9), agents, cfg, mrp, phi,
                        ChannelStreams.for_config(cfg))


class TestRunQfedtd:
    def test_zero_noise_fixed_point_is_absorbing(self):
        # Constant rewards with uniform rows: every sampled direction at
        # the fixed point is exactly zero, so the error stays at zero.
        mrp = validate_mrp([[0.5, 0.5], [0.5, 0.5]], [0.7, 0.7], 0.5)
        phi = FeatureMatrix(Phi=np.eye(2))
        oracle = compute_oracles(mrp, phi)
        cfg = RunConfig(N=3, T=200, alpha=0.4, quantizer=identity_quantizer(),
                        erasure=ErasureSpec(p=1.0), theta0=oracle.theta_star,
                        master_seed=1)
        deltas = run_qfedtd(cfg, mrp, phi, oracle)
        assert np.all(deltas == 0.0)

    def test_matches_stepwise_execution(self, stock_model):
        mrp, phi, oracle = stock_model
        cfg = RunConfig(N=3, T=64, alpha=0.3, quantizer=uniform_quantizer(3, phi.m),
                        erasure=ErasureSpec(p=0.7), master_seed=99)
        block = run_qfedtd(cfg, mrp, phi, oracle)
        agents = make_agents(3, 99)
        channels = ChannelStreams.for_config(cfg)
        theta = np.zeros(phi.m)
        stepwise = [((theta - oracle.theta_star) ** 2).sum()]
        for _ in range(64):
            theta, agents = qfedtd_step(theta, agents, cfg, mrp, phi, channels)
            stepwise.append(((theta - oracle.theta_star) ** 2).sum())
        assert np.array_equal(np.array(stepwise), block)

    def test_centralized_reduction_bitwise(self, stock_model):
        mrp, phi, oracle = stock_model
        cfg = lossless_cfg(1, 500, alpha=0.2, seed=31)
        deltas = run_qfedtd(cfg, mrp, phi, oracle)
        ref = reference_td0(mrp, phi, 0.2, 500, 31, oracle.theta_star)
        assert np.array_equal(deltas, ref)

    def test_deterministic_in_master_seed(self, stock_model):
        mrp, phi, oracle = stock_model
        cfg = RunConfig(N=5, T=100, alpha=0.4, quantizer=uniform_quantizer(4, phi.m),
                        erasure=ErasureSpec(p=0.6), master_seed=8)
        a = run_qfedtd(cfg, mrp, phi, oracle)
        b = run_qfedtd(cfg, mrp, phi, oracle)
        assert np.array_equal(a, b)
        c = run_qfedtd(cfg.with_seed(9), mrp, phi, oracle)
        assert not np.array_equal(a, c)

    def test_erasure_scaling_with_exact_direction(self, stock_model):
        # With the exact steady-state direction substituted for sampled
        # directions and no quantization, each step must move by
        # alpha * (survivors / N) * gbar(theta).
        mrp, phi, oracle = stock_model
        N, p, alpha = 8, 0.7, 0.2
        cfg = RunConfig(N=N, T=1, alpha=alpha, quantizer=identity_quantizer(),
                        erasure=ErasureSpec(p=p), master_seed=17)
        gbar = lambda theta: steady_state_direction(theta, oracle, mrp, phi)

        theta = np.full(phi.m, 0.5)
        mask_gen = streams.stream(17, streams.MASK)
        agents = make_agents(N, 17)
        channels = ChannelStreams.for_config(cfg)
        theta1, _ = qfedtd_step(theta, agents, cfg, mrp, phi, channels,
                                g_override=gbar)
        survivors = (mask_gen.random(N) < p).sum()
        expected = theta + alpha * (survivors / N) * gbar(theta)
        np.testing.assert_allclose(theta1, expected, rtol=1e-12, atol=1e-15)

    def test_erasure_drift_direction_monte_carlo(self, stock_model):
        # Mean single-step progress over random masks dominates
        # p * alpha * omega * (1-gamma) * delta^2 up to sampling error.
        mrp, phi, oracle = stock_model
        N, p, alpha = 8, 0.6, 0.1
        rng = streams.stream(23, streams.PROBE)
        theta = oracle.theta_star + rng.standard_normal(phi.m)
        gap = oracle.theta_star - theta
        gbar = steady_state_direction(theta, oracle, mrp, phi)
        drift = float(gap @ gbar)
        trials = 20_000
        fractions = (rng.random((trials, N)) < p).mean(axis=1)
        progress = alpha * fractions * drift
        mean = progress.mean()
        se = progress.std(ddof=1) / math.sqrt(trials)
        floor = p * alpha * oracle.omega * (1.0 - mrp.gamma) * float(gap @ gap)
        assert mean + 4.0 * se >= floor

    def test_ceiling_warning_logged(self, stock_model, caplog):
        mrp, phi, oracle = stock_model
        cfg = lossless_cfg(1, 2, alpha=0.6)
        with caplog.at_level(logging.WARNING, logger="qfedtd.federation"):
            run_qfedtd(cfg, mrp, phi, oracle)
        assert any("ceiling" in rec.message for rec in caplog.records)


class TestHorizonMatchedSchedule:
    def test_direct_formula(self):
        # omega (1-gamma) = 0.5, N=1, p=1, T=100.
        alpha = horizon_matched_schedule(1, 100, omega=1.0, gamma=0.5, p=1.0)
        assert alpha == pytest.approx(math.log(100) / 50.0, rel=1e-12)

    def test_monotone_in_horizon(self):
        a1 = horizon_matched_schedule(4, 1000, omega=0.5, gamma=0.5, p=0.8)
        a2 = horizon_matched_schedule(4, 2000, omega=0.5, gamma=0.5, p=0.8)
        assert a2 < a1

    def test_matches_high_precision_recompute(self, stock_model):
        mrp, _, oracle = stock_model
        N, T, p = 40, 100_000, 0.6
        alpha = horizon_matched_schedule(N, T, oracle.omega, mrp.gamma, p)
        with mpmath.workdps(50):
            ref = mpmath.log(N * T) / (mpmath.mpf(oracle.omega)
                                       * (1 - mpmath.mpf(mrp.gamma))
                                       * mpmath.mpf(p) * T)
            assert abs(alpha - float(ref)) <= 1e-15 * float(ref)

    def test_floor_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="qfedtd.federation"):
            horizon_matched_schedule(40, 100, omega=0.04, gamma=0.5, p=0.6,
                               tau=10, zeta_prime=1.0)
        assert any("floor" in rec.message for rec in caplog.records)

    def test_resolution_inside_run_config(self, stock_model):
        mrp, _, oracle = stock_model
        cfg = RunConfig(N=4, T=512, alpha=HorizonMatchedStep(),
                        quantizer=identity_quantizer(), erasure=ErasureSpec(p=1.0))
        alpha = resolve_step_size(cfg, mrp, oracle)
        assert alpha == pytest.approx(
            math.log(4 * 512) / (oracle.omega * 0.5 * 512), rel=1e-12)


def test_bound_constants_values():
    c = BoundConstants()
    assert (c.C0, c.C2, c.C3, c.q) == (6446.0, 5162.0, 61.0, 2)
    assert c.c1(2.0, 0.5, 3.0) == pytest.approx(4 * 2.0 + 2 * 0.5 * 9.0)
