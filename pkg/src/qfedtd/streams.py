"""Counter-based random streams with schedule-independent positions.

Every random draw in a simulation is addressed by a (purpose, member)
pair: the purpose tag separates the environment chain, quantizer noise,
and erasure process from each other, and the member index separates
agents.  Streams are built on the Philox counter-based generator keyed
through ``SeedSequence(master_seed, spawn_key=(purpose, member))``, so
distinct (purpose, member) pairs can never overlap and the value at any
stream position is independent of how work is scheduled across threads
or processes.

Within a stream, positions are consumed in iteration order with a fixed
number of variates per iteration, so the draw used by agent ``i`` at
iteration ``k`` is always the same double no matter whether iterations
are executed one step at a time or in pre-drawn blocks.
"""

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

# Purpose tags.  Values are part of the reproducibility contract: changing
# them changes every trajectory produced from a given master seed.
ENV = 0        # next-state sampling of the Markov chains
QUANT = 1      # stochastic-rounding noise of the quantizer
MASK = 2       # Bernoulli erasure process (server-side, one stream)
MODEL = 3      # synthetic model generation
PROBE = 4      # randomized property checks and Monte-Carlo oracles


def stream(master_seed, purpose, member=0):
    """Return the Generator for one (purpose, member) stream.

    Parameters
    ----------
    master_seed : int
        Master seed of the run.
    purpose : int
        One of the purpose tags defined in this module.
    member : int, optional
        Agent index, or 0 for server-owned streams.
    """
    seq = SeedSequence(master_seed, spawn_key=(purpose, member))
    return Generator(Philox(seq))


def agent_streams(master_seed, n_agents, purpose):
    """Per-agent streams for one purpose, indexed by agent id."""
    return [stream(master_seed, purpose, i) for i in range(n_agents)]


def derive_seed(base_seed, replicate):
    """Derive the master seed of one replicate from a base seed.

    Deterministic and collision-free across (base_seed, replicate)
    pairs; used by sweep runners to expand a seed count into concrete
    master seeds.
    """
    seq = SeedSequence([int(base_seed), int(replicate)])
    return int(seq.generate_state(1, np.uint64)[0])
