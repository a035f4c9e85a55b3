"""Finite-time bound evaluation and the randomized property suite.

The bound on the expected squared error after ``T`` iterations is

    (1 - alpha omega (1-gamma) p)^T * C1
        + (tau sigma^2 / (omega (1-gamma))) * (C2 alpha zeta' / N + C3 alpha^3)

with ``C1 = 4 delta0^2 + 2 p sigma^2``, mixing time ``tau`` taken at
precision ``alpha^q`` (q = 2), and ``zeta' = max(1, zeta)``.  The
envelope check runs the simulator at a compliant step size and tests
that the measured mean squared error sits below this value; a violation
would falsify the implementation, not the analysis, since the constants
make the bound loose by construction.

The property suite stress-tests the inequalities every piece of the
analysis leans on: the drift condition of the steady-state direction,
the 2-Lipschitz property of sampled and steady-state directions, the
norm bound on sampled directions, and the unbiasedness / bounded
distortion / grid-support contract of the quantizer.
"""

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from . import streams
from .channel import IDENTITY, identity_quantizer, quantize_batch, uniform_quantizer
from .errors import HorizonTooShort, InsufficientPoints
from .federation import BoundConstants, resolve_step_size, run_qfedtd, step_size_ceiling
from .td import drift_matrix, estimate_mixing_time

_SLACK_TOL = -1e-9


@dataclass(frozen=True)
class BoundInputs:
    """Everything the finite-time bound evaluator consumes."""

    alpha: float
    omega: float
    gamma: float
    p: float
    tau: int
    sigma_noise: float
    zeta_prime: float
    delta0_sq: float
    N: int
    T: int
    constants: BoundConstants = BoundConstants()


def finite_time_bound(inputs):
    """Evaluate the finite-time upper bound on ``E[delta_T^2]``.

    Raises
    ------
    HorizonTooShort
        ``T < 2 tau``; the bound does not apply.
    """
    b = inputs
    if b.T < 2 * b.tau:
        raise HorizonTooShort(f"T = {b.T} is below 2*tau = {2 * b.tau}")
    rho = 1.0 - b.alpha * b.omega * (1.0 - b.gamma) * b.p
    c1 = b.constants.c1(b.delta0_sq, b.p, b.sigma_noise)
    variance = (b.tau * b.sigma_noise**2 / (b.omega * (1.0 - b.gamma))) * (
        b.constants.C2 * b.alpha * b.zeta_prime / b.N + b.constants.C3 * b.alpha**3)
    return rho**b.T * c1 + variance


def compliant_step_size(mrp, oracle, zeta_prime, constants=BoundConstants()):
    """Resolve the step-size ceiling together with its mixing time.

    The ceiling depends on the mixing time at precision ``alpha^q``,
    which itself depends on ``alpha``; the pair is computed by fixed-
    point iteration (monotone and stable: smaller ``alpha`` can only
    increase ``tau``).

    Returns
    -------
    (alpha, tau)
    """
    tau = 1
    for _ in range(64):
        alpha = step_size_ceiling(oracle.omega, mrp.gamma, tau, zeta_prime, constants)
        new_tau = max(1, estimate_mixing_time(mrp, oracle.pi, min(1.0, alpha**constants.q)))
        if new_tau == tau:
            return alpha, tau
        tau = max(tau, new_tau)
    return alpha, tau


def bound_inputs_for_run(cfg, mrp, phi, oracle, constants=BoundConstants()):
    """Assemble :class:`BoundInputs` for one run configuration."""
    alpha = resolve_step_size(cfg, mrp, oracle)
    tau = max(1, estimate_mixing_time(mrp, oracle.pi, min(1.0, alpha**constants.q)))
    theta0 = np.zeros(phi.m) if cfg.theta0 is None else np.asarray(cfg.theta0)
    delta0_sq = float(((theta0 - oracle.theta_star) ** 2).sum())
    return BoundInputs(alpha=alpha, omega=oracle.omega, gamma=mrp.gamma,
                       p=cfg.erasure.p, tau=tau, sigma_noise=oracle.sigma_noise,
                       zeta_prime=max(1.0, cfg.quantizer.zeta),
                       delta0_sq=delta0_sq, N=cfg.N, T=cfg.T, constants=constants)


def verify_bound_envelope(cfg, mrp, phi, oracle, seeds):
    """Check measured mean squared error against the theoretical bound.

    Runs ``seeds`` replicates, averages the terminal squared error, and
    compares with :func:`finite_time_bound`.  The check is one-sided: it is
    only asserted (status PASS/FAIL) when the step size is within the
    ceiling; otherwise the report is advisory.
    """
    inputs = bound_inputs_for_run(cfg, mrp, phi, oracle)
    bound = finite_time_bound(inputs)
    ceiling, _ = compliant_step_size(mrp, oracle, inputs.zeta_prime, inputs.constants)
    terminal = np.empty(seeds)
    for rep in range(seeds):
        run_cfg = cfg.with_seed(streams.derive_seed(cfg.master_seed, rep))
        terminal[rep] = run_qfedtd(run_cfg, mrp, phi, oracle)[-1]
    mean_delta_sq = float(terminal.mean())
    asserted = inputs.alpha <= ceiling * (1.0 + 1e-12)
    holds = mean_delta_sq <= bound
    return {
        "property": "finite-time-bound-envelope",
        "status": ("PASS" if holds else "FAIL") if asserted else "ADVISORY",
        "asserted": asserted,
        "alpha": inputs.alpha,
        "alpha_ceiling": ceiling,
        "tau": inputs.tau,
        "bound": bound,
        "mean_delta_sq": mean_delta_sq,
        "slack_factor": bound / mean_delta_sq if mean_delta_sq > 0 else math.inf,
        "seeds": seeds,
    }


def speedup_regression(plateaus):
    """Log-log slope of plateau level versus agent count.

    ``plateaus`` holds ``(N, plateau)`` pairs; at least four distinct
    agent counts are required.  A slope near -1 is the N-fold variance
    reduction signature.

    Raises
    ------
    InsufficientPoints
    """
    pairs = [(int(n), float(v)) for n, v in plateaus]
    if len({n for n, _ in pairs}) < 4:
        raise InsufficientPoints(f"need >= 4 distinct agent counts, got {len(pairs)} points")
    x = np.log([n for n, _ in pairs])
    y = np.log([v for _, v in pairs])
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)


def _random_parameters(rng, m, trials, center=None):
    """Parameter draws spanning magnitudes 1e-2 to 1e2."""
    scales = 10.0 ** rng.uniform(-2.0, 2.0, size=trials)
    directions = rng.standard_normal((trials, m))
    thetas = scales[:, None] * directions
    if center is not None:
        half = trials // 2
        thetas[:half] += center
    return thetas


def check_drift_condition(mrp, phi, oracle, trials, rng, gbar_fn=None):
    """Drift of the steady-state direction toward the fixed point.

    For every parameter, ``<theta* - theta, gbar(theta)>`` must be at
    least ``omega (1-gamma) ||theta* - theta||^2``.
    """
    A, b = drift_matrix(mrp, phi, oracle.pi)
    thetas = _random_parameters(rng, phi.m, trials, center=oracle.theta_star)
    if gbar_fn is None:
        gbar = b[None, :] - thetas @ A.T
    else:
        gbar = gbar_fn(thetas)
    gap = oracle.theta_star[None, :] - thetas
    drift = (gap * gbar).sum(axis=1)
    floor = oracle.omega * (1.0 - mrp.gamma) * (gap * gap).sum(axis=1)
    worst = float((drift - floor).min())
    return {"property": "drift-condition", "status": "PASS" if worst >= _SLACK_TOL else "FAIL",
            "worst_slack": worst, "trials": trials}


def _random_observations(mrp, trials, rng):
    s = rng.integers(0, mrp.n, size=trials)
    s_next = rng.integers(0, mrp.n, size=trials)
    return s, s_next


def check_lipschitz(mrp, phi, oracle, trials, rng):
    """Both direction maps are 2-Lipschitz in the parameter."""
    m = phi.m
    s, s_next = _random_observations(mrp, trials, rng)
    theta_a = _random_parameters(rng, m, trials)
    theta_b = _random_parameters(rng, m, trials)
    diff = theta_a - theta_b
    diff_norm = np.linalg.norm(diff, axis=1)

    phi_cur = phi.Phi[s]
    phi_next = phi.Phi[s_next]
    err_gap = (mrp.gamma * (phi_next * diff).sum(axis=1)
               - (phi_cur * diff).sum(axis=1))
    sampled_gap = np.abs(err_gap) * np.linalg.norm(phi_cur, axis=1)
    worst_sampled = float((2.0 * diff_norm - sampled_gap).min())

    A, _ = drift_matrix(mrp, phi, oracle.pi)
    steady_gap = np.linalg.norm(diff @ A.T, axis=1)
    worst_steady = float((2.0 * diff_norm - steady_gap).min())

    worst = min(worst_sampled, worst_steady)
    return {"property": "two-lipschitz", "status": "PASS" if worst >= _SLACK_TOL else "FAIL",
            "worst_slack": worst, "trials": trials}


def check_norm_bound(mrp, phi, trials, rng):
    """Sampled directions obey ``||g|| <= 2 ||theta|| + 2 r_bar``."""
    s, s_next = _random_observations(mrp, trials, rng)
    thetas = _random_parameters(rng, phi.m, trials)
    phi_cur = phi.Phi[s]
    phi_next = phi.Phi[s_next]
    err = (mrp.R[s] + mrp.gamma * (phi_next * thetas).sum(axis=1)
           - (phi_cur * thetas).sum(axis=1))
    g_norm = np.abs(err) * np.linalg.norm(phi_cur, axis=1)
    cap = 2.0 * np.linalg.norm(thetas, axis=1) + 2.0 * mrp.r_bar
    worst = float((cap - g_norm).min())
    return {"property": "direction-norm-bound", "status": "PASS" if worst >= _SLACK_TOL else "FAIL",
            "worst_slack": worst, "trials": trials}


def check_quantizer_contract(spec, dim, rng, n_vectors=20, draws=4000):
    """Unbiasedness, distortion, and grid support of one quantizer.

    Monte-Carlo check: per-component deviation of the empirical mean
    from the input within 4 standard errors, empirical relative
    distortion below ``zeta``, and outputs on the scale grid.
    """
    worst_bias = math.inf
    worst_distortion = math.inf
    worst_grid = math.inf
    for _ in range(n_vectors):
        x = 10.0 ** rng.uniform(-1.0, 1.0) * rng.standard_normal(dim)
        X = np.broadcast_to(x, (draws, dim))
        if spec.kind == IDENTITY:
            Q = quantize_batch(spec, X, None)
        else:
            Q = quantize_batch(spec, X, rng.random((draws, dim)))
        err = Q - x
        se = err.std(axis=0, ddof=1) / math.sqrt(draws)
        bias_slack = 4.0 * se + 1e-15 - np.abs(err.mean(axis=0))
        worst_bias = min(worst_bias, float(bias_slack.min()))
        ratio = float((err * err).sum(axis=1).mean() / (x * x).sum())
        worst_distortion = min(worst_distortion, spec.zeta - ratio)
        if spec.kind != IDENTITY:
            scale = np.linalg.norm(x) if spec.scaling == "l2" else np.abs(x).max()
            level = Q * (spec.levels / scale)
            off_grid = np.abs(level - np.round(level)).max()
            worst_grid = min(worst_grid, float(1e-9 - off_grid))
    results = [
        ("quantizer-unbiased", worst_bias),
        ("quantizer-distortion", worst_distortion),
    ]
    if spec.kind != IDENTITY:
        results.append(("quantizer-grid-support", worst_grid))
    tag = spec.kind if spec.kind == IDENTITY else f"{spec.kind}-{spec.bits}bit"
    return [{"property": f"{name}[{tag}]",
             "status": "PASS" if worst >= _SLACK_TOL else "FAIL",
             "worst_slack": worst, "trials": n_vectors * draws}
            for name, worst in results]


def run_property_suite(mrp, phi, oracle, trials=10_000, seed=0, gbar_fn=None,
                       quantizer_specs=None):
    """Run every inequality check; returns one report entry per property.

    ``gbar_fn`` substitutes the steady-state direction in the drift
    check (mutation-testing hook).  Entries are JSON-serializable
    dicts ``{property, status, worst_slack, trials}``.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    rng = streams.stream(seed, streams.PROBE)
    report = [
        check_drift_condition(mrp, phi, oracle, trials, rng, gbar_fn=gbar_fn),
        check_lipschitz(mrp, phi, oracle, trials, rng),
        check_norm_bound(mrp, phi, trials, rng),
    ]
    if quantizer_specs is None:
        quantizer_specs = [identity_quantizer(), uniform_quantizer(4, phi.m)]
    for spec in quantizer_specs:
        report.extend(check_quantizer_contract(spec, phi.m, rng))
    return report


def report_to_json(report):
    """Serialize a property-suite or envelope report to JSON text."""
    return json.dumps(report, indent=2, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, BoundConstants):
        return asdict(obj)
    raise TypeError(f"cannot serialize {type(obj)}")
