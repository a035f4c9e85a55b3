"""Federated TD(0) policy evaluation over finite-rate erasure channels.

A simulation library for synchronous federated policy evaluation with
linear function approximation, where agents upload stochastically
quantized TD update directions over Bernoulli erasure channels.  Ships
with exact ground-truth oracles (stationary distribution, projected
fixed point, spectral constants), a finite-time bound evaluator, a
randomized inequality suite, and the stock convergence experiments.
"""

from .channel import (
    ErasureSpec,
    QuantizerSpec,
    erasure_mask,
    identity_quantizer,
    quantize,
    uniform_quantizer,
    uplink_bits,
)
from .errors import (
    BadDims,
    DimMismatch,
    Divergence,
    GammaOutOfRange,
    HorizonTooShort,
    InsufficientPoints,
    MixingNotReached,
    NegativeProbability,
    NonFiniteInput,
    NonStochasticRow,
    NotSymmetric,
    PeriodicChain,
    QFedTDError,
    ReducibleChain,
    SingularSystem,
)
from .federation import (
    ChannelStreams,
    ConstantStep,
    HorizonMatchedStep,
    RunConfig,
    BoundConstants,
    horizon_matched_schedule,
    qfedtd_step,
    resolve_step_size,
    run_qfedtd,
    step_size_ceiling,
)
from .mrp import (
    FeatureMatrix,
    Mrp,
    OracleBundle,
    compute_oracles,
    fixed_point,
    generate_synthetic,
    load_model,
    monte_carlo_value,
    save_model,
    spectral_constant,
    stationary_distribution,
    true_value_function,
    validate_features,
    validate_mrp,
)
from .td import (
    AgentState,
    Observation,
    estimate_mixing_time,
    make_agents,
    mean_path_recursion,
    step_agent,
    steady_state_direction,
    td_direction,
)
from .verify import (
    BoundInputs,
    compliant_step_size,
    run_property_suite,
    speedup_regression,
    finite_time_bound,
    verify_bound_envelope,
)

__version__ = "0.1.0"
