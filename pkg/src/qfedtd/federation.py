"""The QFedTD aggregation loop.

Each iteration the server broadcasts the current parameter vector;
every agent advances its own chain by one transition, computes a
sampled TD direction, and uploads a quantized copy over its erasure
channel.  The server averages the surviving uploads over the full agent
count ``N`` (erased agents contribute zero; no renormalization by the
survivor count) and takes one step:

    theta <- theta + alpha * (1/N) * sum_i b_i * Q(g_i(theta))

Runs are bit-reproducible in the master seed: agent chains, quantizer
noise, and the erasure process each consume their own counter-based
streams with a fixed number of variates per iteration, so stepping one
iteration at a time and running in pre-drawn blocks produce identical
trajectories, independent of worker scheduling.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import streams
from .channel import (
    STOCHASTIC_UNIFORM,
    ErasureSpec,
    QuantizerSpec,
    erasure_mask,
    quantize_batch,
    uplink_bits,
)
from .errors import Divergence
from .td import estimate_mixing_time, sample_next_states

log = logging.getLogger(__name__)

_CHUNK = 1024
_NORM_GUARD = 1e9


@dataclass(frozen=True)
class ConstantStep:
    """Fixed step size."""

    alpha: float

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise ValueError(f"step size must be positive, got {self.alpha}")


@dataclass(frozen=True)
class HorizonMatchedStep:
    """Horizon-matched schedule ``alpha = log(N T) / (omega (1-gamma) p T)``."""


@dataclass(frozen=True)
class BoundConstants:
    """Universal constants of the finite-time bound."""

    C0: float = 6446.0
    C2: float = 5162.0
    C3: float = 61.0
    q: int = 2

    def c1(self, delta0_sq, p, sigma_noise):
        """Transient coefficient ``4 delta0^2 + 2 p sigma^2``."""
        return 4.0 * delta0_sq + 2.0 * p * sigma_noise**2


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Configuration of one federated run.

    ``alpha`` accepts a float (treated as a constant step size) or a
    schedule object.  ``theta0`` defaults to the zero vector.
    """

    N: int
    T: int
    alpha: object
    quantizer: QuantizerSpec
    erasure: ErasureSpec
    theta0: np.ndarray | None = None
    master_seed: int = 0
    s0: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"need at least one agent, got N={self.N}")
        if self.T < 1:
            raise ValueError(f"need at least one iteration, got T={self.T}")
        if isinstance(self.alpha, (int, float)):
            object.__setattr__(self, "alpha", ConstantStep(float(self.alpha)))

    def with_seed(self, master_seed):
        return replace(self, master_seed=int(master_seed))


@dataclass
class ChannelStreams:
    """Per-run random streams owned by the channel stack."""

    quant: list = field(default_factory=list)
    mask: np.random.Generator | None = None

    @classmethod
    def for_config(cls, cfg):
        quant = []
        if cfg.quantizer.kind == STOCHASTIC_UNIFORM:
            quant = streams.agent_streams(cfg.master_seed, cfg.N, streams.QUANT)
        mask = None
        if cfg.erasure.p < 1.0:
            mask = streams.stream(cfg.master_seed, streams.MASK)
        return cls(quant=quant, mask=mask)


def horizon_matched_schedule(N, T, omega, gamma, p, tau=None, zeta_prime=None,
                             constants=BoundConstants()):
    """Step size ``log(N T) / (omega (1-gamma) p T)``.

    Warns (never raises) when ``N T < e`` or, if ``tau`` and
    ``zeta_prime`` are supplied, when ``T`` is below the floor
    ``2 C0 N tau zeta' log(NT) / (omega^2 (1-gamma)^2 p)`` that the
    schedule's guarantee assumes.
    """
    nt = N * T
    if nt < math.e:
        log.warning("N*T = %d is below e; the schedule is degenerate", nt)
    alpha = math.log(nt) / (omega * (1.0 - gamma) * p * T)
    if tau is not None and zeta_prime is not None:
        floor = (2.0 * constants.C0 * N * tau * zeta_prime * math.log(nt)
                 / (omega**2 * (1.0 - gamma) ** 2 * p))
        if T < floor:
            log.warning("T = %d is below the schedule floor %.3g; "
                        "the horizon-matched guarantee does not apply", T, floor)
    return alpha


def resolve_step_size(cfg, mrp, oracle):
    """Concrete step size for a run configuration."""
    if isinstance(cfg.alpha, ConstantStep):
        return cfg.alpha.alpha
    if isinstance(cfg.alpha, HorizonMatchedStep):
        return horizon_matched_schedule(cfg.N, cfg.T, oracle.omega, mrp.gamma,
                                  cfg.erasure.p)
    raise TypeError(f"unsupported step schedule {cfg.alpha!r}")


def step_size_ceiling(omega, gamma, tau, zeta_prime, constants=BoundConstants()):
    """Largest step size the finite-time bound admits."""
    return omega * (1.0 - gamma) / (constants.C0 * tau * zeta_prime)


def _setup_diagnostics(cfg, mrp, phi, oracle, alpha):
    """Log derived run quantities; warn when alpha exceeds the ceiling."""
    zeta_prime = max(1.0, cfg.quantizer.zeta)
    log.info("run setup: N=%d T=%d alpha=%.6g p=%.3g zeta=%.6g zeta'=%.6g "
             "uplink bits/agent/iter=%d",
             cfg.N, cfg.T, alpha, cfg.erasure.p, cfg.quantizer.zeta, zeta_prime,
             uplink_bits(cfg.quantizer, phi.m))
    if not log.isEnabledFor(logging.WARNING) or isinstance(cfg.alpha, HorizonMatchedStep):
        return
    try:
        tau = estimate_mixing_time(mrp, oracle.pi, min(1.0, alpha**2))
    except Exception:
        return
    ceiling = step_size_ceiling(oracle.omega, mrp.gamma, max(tau, 1), zeta_prime)
    if alpha > ceiling:
        log.warning("alpha=%.3g exceeds the conservative step-size ceiling %.3g; "
                    "the finite-time bound is not asserted for this run", alpha, ceiling)


def _round(theta, states, u_env, u_quant, u_mask, cum_P, R, Phi, gamma,
           alpha, cfg, g_override):
    """One synchronized iteration; pure given the drawn uniforms."""
    s_next = sample_next_states(cum_P, states, u_env)
    if g_override is None:
        phi_cur = Phi[states]
        phi_next = Phi[s_next]
        err = (R[states] + gamma * (phi_next * theta).sum(axis=1)
               - (phi_cur * theta).sum(axis=1))
        G = err[:, None] * phi_cur
    else:
        G = np.broadcast_to(np.asarray(g_override(theta), dtype=np.float64),
                            (cfg.N, Phi.shape[1]))
    if cfg.quantizer.kind == STOCHASTIC_UNIFORM:
        H = quantize_batch(cfg.quantizer, G, u_quant)
    else:
        H = G
    if cfg.erasure.p < 1.0:
        H = (u_mask < cfg.erasure.p).astype(np.float64)[:, None] * H
    aggregate = H.sum(axis=0) / cfg.N
    return theta + alpha * aggregate, s_next


def qfedtd_step(theta, agents, cfg, mrp, phi, channels, g_override=None):
    """Advance the federation by one global iteration.

    Draws one environment uniform per agent from the agents' own
    streams, the quantizer block from the channel streams, and the
    erasure mask from the mask stream, then applies the server update.
    Returns the new parameter vector and the (mutated) agents.

    Raises
    ------
    Divergence
        The parameter norm exceeded 1e9.
    """
    if len(agents) != cfg.N:
        raise ValueError(f"got {len(agents)} agents for N={cfg.N}")
    theta = np.asarray(theta, dtype=np.float64)
    states = np.array([a.current_state for a in agents], dtype=np.intp)
    u_env = np.array([a.rng_stream.random() for a in agents])
    u_quant = None
    if cfg.quantizer.kind == STOCHASTIC_UNIFORM:
        u_quant = np.stack([q.random(phi.m) for q in channels.quant])
    u_mask = channels.mask.random(cfg.N) if cfg.erasure.p < 1.0 else None
    alpha = cfg.alpha.alpha if isinstance(cfg.alpha, ConstantStep) else None
    if alpha is None:
        raise TypeError("qfedtd_step needs a resolved constant step size; "
                        "use run_qfedtd for schedules")
    cum_P = np.cumsum(mrp.P, axis=1)
    theta_next, s_next = _round(theta, states, u_env, u_quant, u_mask,
                                cum_P, mrp.R, phi.Phi, mrp.gamma, alpha,
                                cfg, g_override)
    if not np.isfinite(theta_next).all() or (theta_next * theta_next).sum() > _NORM_GUARD**2:
        raise Divergence("parameter norm exceeded 1e9")
    for agent, s in zip(agents, s_next):
        agent.current_state = int(s)
    return theta_next, agents


def run_qfedtd(cfg, mrp, phi, oracle, g_override=None):
    """Run ``T`` federated iterations and record the squared error.

    Returns an array of length ``T + 1`` holding
    ``||theta_k - theta_star||^2`` for ``k = 0..T``.  Fully
    deterministic in ``cfg.master_seed``; uniforms are pre-drawn in
    blocks from the same per-agent streams that single stepping uses,
    so both paths produce identical trajectories.

    Raises
    ------
    Divergence
        The parameter norm exceeded 1e9.
    """
    m = phi.m
    theta = (np.zeros(m) if cfg.theta0 is None
             else np.array(cfg.theta0, dtype=np.float64))
    if theta.shape != (m,):
        raise ValueError(f"theta0 shape {theta.shape} does not match feature dim {m}")
    alpha = resolve_step_size(cfg, mrp, oracle)
    _setup_diagnostics(cfg, mrp, phi, oracle, alpha)

    env = streams.agent_streams(cfg.master_seed, cfg.N, streams.ENV)
    channels = ChannelStreams.for_config(cfg)
    quantizing = cfg.quantizer.kind == STOCHASTIC_UNIFORM
    erasing = cfg.erasure.p < 1.0

    cum_P = np.cumsum(mrp.P, axis=1)
    states = np.full(cfg.N, cfg.s0, dtype=np.intp)
    star = oracle.theta_star
    deltas = np.empty(cfg.T + 1)
    diff = theta - star
    deltas[0] = (diff * diff).sum()

    k = 0
    while k < cfg.T:
        c = min(_CHUNK, cfg.T - k)
        u_env = np.empty((c, cfg.N))
        for i, gen in enumerate(env):
            u_env[:, i] = gen.random(c)
        u_quant = None
        if quantizing:
            u_quant = np.empty((c, cfg.N, m))
            for i, gen in enumerate(channels.quant):
                u_quant[:, i, :] = gen.random((c, m))
        u_mask = channels.mask.random((c, cfg.N)) if erasing else None
        for t in range(c):
            theta, states = _round(
                theta, states, u_env[t],
                u_quant[t] if quantizing else None,
                u_mask[t] if erasing else None,
                cum_P, mrp.R, phi.Phi, mrp.gamma, alpha, cfg, g_override)
            nsq = (theta * theta).sum()
            if not np.isfinite(nsq) or nsq > _NORM_GUARD**2:
                raise Divergence(f"parameter norm exceeded 1e9 at iteration {k + t + 1}")
            diff = theta - star
            deltas[k + t + 1] = (diff * diff).sum()
        k += c
    return deltas
