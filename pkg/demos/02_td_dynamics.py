"""Noiseless versus sampled TD(0) dynamics on the stock model.

The deterministic recursion theta <- theta + alpha * gbar(theta)
contracts geometrically to the fixed point; a single sampled agent
follows it in expectation but plateaus at a noise floor.
"""

import numpy as np

from qfedtd import (
    ErasureSpec,
    RunConfig,
    compute_oracles,
    generate_synthetic,
    identity_quantizer,
    make_agents,
    mean_path_recursion,
    run_qfedtd,
    step_agent,
)

mrp, phi = generate_synthetic(n=20, m=10, gamma=0.5, seed=7)
oracle = compute_oracles(mrp, phi)
alpha = 0.3

deltas = mean_path_recursion(np.zeros(phi.m), alpha, 600, oracle, mrp, phi)
ratios = deltas[1:] / deltas[:-1]
print("noiseless squared error: start %.4f, after 600 steps %.3e" % (deltas[0], deltas[-1]))
print("per-step contraction ratio settles to %.6f" % ratios[-1])

cfg = RunConfig(N=1, T=600, alpha=alpha, quantizer=identity_quantizer(),
                erasure=ErasureSpec(p=1.0), master_seed=3)
sampled = run_qfedtd(cfg, mrp, phi, oracle)
print("sampled single agent:    start %.4f, after 600 steps %.3e" % (sampled[0], sampled[-1]))
print("sampled path tracks the mean path early, then floors on sampling noise")

# Raw agent stepping: one chain transition per call, reproducible in
# the master seed, independent across agents.
agent = make_agents(n_agents=1, master_seed=3)[0]
visits = []
for _ in range(12):
    agent, obs = step_agent(agent, mrp)
    visits.append(obs.s_next)
print("first transitions of agent 0:", visits)
