"""Sampled and steady-state TD(0) update directions, agents, mixing.

The sampled direction for an observation ``(s, r, s')`` at parameter
``theta`` is

    g = (r + gamma * <phi_next, theta> - <phi_cur, theta>) * phi_cur

and its expectation under the stationary chain has the closed form

    gbar(theta) = Phi^T D (R + gamma * P Phi theta - Phi theta),

which vanishes exactly at the projected-Bellman fixed point.

Inner products are evaluated as elementwise multiply followed by a
pairwise sum.  The batched helpers used by the federation loop reduce
each row with the same primitive, so single-agent and vectorized paths
produce bit-identical floats.
"""

from dataclasses import dataclass

import numpy as np

from . import streams
from .errors import DimMismatch, Divergence, MixingNotReached

_MIXING_CAP = 1_000_000
_DIVERGENCE_GUARD = 1e12


@dataclass(frozen=True)
class Observation:
    """One transition tuple ``(s, r, s_next)`` observed by an agent."""

    s: int
    r: float
    s_next: int


@dataclass
class AgentState:
    """Simulation state of one agent: position plus its private stream."""

    agent_id: int
    current_state: int
    rng_stream: np.random.Generator


def make_agents(n_agents, master_seed, s0=0):
    """Create agents at a common initial state with separated streams."""
    return [
        AgentState(agent_id=i, current_state=int(s0),
                   rng_stream=streams.stream(master_seed, streams.ENV, i))
        for i in range(n_agents)
    ]


def _check_dim(theta, phi):
    if np.shape(theta) != (phi.m,):
        raise DimMismatch(f"parameter shape {np.shape(theta)} does not match feature dim {phi.m}")


def td_direction(theta, obs, phi, gamma):
    """Sampled TD(0) update direction for one observation."""
    _check_dim(theta, phi)
    phi_cur = phi.Phi[obs.s]
    phi_next = phi.Phi[obs.s_next]
    err = obs.r + gamma * (phi_next * theta).sum() - (phi_cur * theta).sum()
    return err * phi_cur


def steady_state_direction(theta, oracle, mrp, phi):
    """Exact expectation of the TD direction under the stationary chain."""
    _check_dim(theta, phi)
    values = phi.Phi @ theta
    bellman_gap = mrp.R + mrp.gamma * (mrp.P @ values) - values
    return phi.Phi.T @ (oracle.pi * bellman_gap)


def drift_matrix(mrp, phi, pi):
    """Matrix ``A`` with ``gbar(theta) = b - A theta``; used by batch checks."""
    weighted = phi.Phi * pi[:, None]
    A = weighted.T @ (phi.Phi - mrp.gamma * (mrp.P @ phi.Phi))
    b = phi.Phi.T @ (pi * mrp.R)
    return A, b


def sample_next_states(cum_P, states, u):
    """Inverse-CDF next states for a batch of agents.

    ``u`` holds one uniform per agent; the returned index counts the
    cumulative-row entries at or below it, which matches a rightward
    searchsorted on the same row.
    """
    nxt = (cum_P[states] <= u[:, None]).sum(axis=1)
    return np.minimum(nxt, cum_P.shape[0] - 1)


def step_agent(agent, mrp):
    """Advance one agent by a single transition of its own chain.

    Consumes exactly one uniform from the agent's stream, so stream
    positions stay aligned with the block-drawing federation loop.
    """
    s = agent.current_state
    u = agent.rng_stream.random()
    cum = np.cumsum(mrp.P[s])
    s_next = int(min(np.searchsorted(cum, u, side="right"), mrp.n - 1))
    obs = Observation(s=s, r=float(mrp.R[s]), s_next=s_next)
    agent.current_state = s_next
    return agent, obs


def mean_path_recursion(theta0, alpha, steps, oracle, mrp, phi):
    """Iterate the noiseless recursion ``theta += alpha * gbar(theta)``.

    Returns the squared distance to the fixed point at every iterate,
    index 0 being the starting point.

    Raises
    ------
    Divergence
        Squared error exceeded 1e12; step size too large.
    """
    if alpha <= 0:
        raise ValueError(f"step size must be positive, got {alpha}")
    theta = np.array(theta0, dtype=np.float64)
    _check_dim(theta, phi)
    deltas = np.empty(steps + 1)
    deltas[0] = ((theta - oracle.theta_star) ** 2).sum()
    for k in range(1, steps + 1):
        theta = theta + alpha * steady_state_direction(theta, oracle, mrp, phi)
        deltas[k] = ((theta - oracle.theta_star) ** 2).sum()
        if not np.isfinite(deltas[k]) or deltas[k] > _DIVERGENCE_GUARD:
            raise Divergence(f"squared error {deltas[k]:.3e} at step {k}; step size {alpha} too large")
    return deltas


def estimate_mixing_time(mrp, pi, epsilon):
    """Smallest k with ``max_s TV(P^k[s, :], pi) <= epsilon``.

    Total-variation mixing of the chain itself; a proxy for the
    TD-direction mixing criterion, which geometric chain mixing implies
    up to constants.  Computed by dense matrix powering.

    Raises
    ------
    MixingNotReached
        The threshold was not reached before the iteration cap, or the
        worst-case distance stopped improving at the floating-point
        floor (near-periodic chain or epsilon below resolution).
    """
    if not (0.0 < epsilon <= 1.0):
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    M = np.eye(mrp.n)
    prev_tv = np.inf
    stalled = 0
    for k in range(_MIXING_CAP + 1):
        tv = 0.5 * np.max(np.abs(M - pi[None, :]).sum(axis=1))
        if tv <= epsilon:
            return k
        stalled = stalled + 1 if tv >= prev_tv else 0
        if stalled >= 50:
            raise MixingNotReached(
                f"worst-case TV stalled at {tv:.3e} > epsilon {epsilon:.3e} after {k} steps")
        prev_tv = tv
        M = M @ mrp.P
    raise MixingNotReached(f"TV above {epsilon} after {_MIXING_CAP} steps")
