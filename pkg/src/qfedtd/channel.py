"""Uplink model: unbiased stochastic quantization and Bernoulli erasures.

The stochastic-uniform quantizer maps a vector ``x`` onto the grid
``{-scale, ..., -scale/s, 0, scale/s, ..., scale}`` with
``s = 2**bits - 1`` levels per unit of scale, rounding each component to
one of its two neighboring grid points with probabilities that make the
expectation exact.

Worst-case distortion bound (the ``zeta`` carried by the spec), for
``scale = ||x||_2``: write ``y_i = |x_i| s / scale`` and let ``f_i`` be
its fractional part.  Rounding component ``i`` to a neighboring grid
point contributes variance ``(scale/s)^2 f_i (1 - f_i)``.  Two
estimates of the total follow.  (i) ``f(1-f) <= 1/4 <= 1`` on every
component caps the sum by ``m (scale/s)^2``.  (ii)
``f_i (1 - f_i) <= f_i <= y_i`` together with
``sum_i y_i = s ||x||_1 / scale <= s sqrt(m)`` (Cauchy-Schwarz) caps it
by ``sqrt(m) s (scale/s)^2 = (sqrt(m)/s) scale^2``.  Hence

    E ||Q(x) - x||^2  <=  min(m / s^2, sqrt(m) / s) * ||x||^2,

the standard bound for norm-scaled stochastic rounding.  With max-norm
scaling the Cauchy-Schwarz step is unavailable and the quarter bound
gives ``zeta = m / (4 s^2)`` relative to ``||x||_inf^2 <= ||x||^2``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteInput

IDENTITY = "identity"
STOCHASTIC_UNIFORM = "stochastic-uniform"

# Bits accounted per upload beyond the payload components: the exponent
# of the scale factor.  Diagnostic only; no bitstream is materialized.
SCALE_EXPONENT_BITS = 11


@dataclass(frozen=True)
class QuantizerSpec:
    """Quantizer configuration with its worst-case distortion bound.

    ``zeta`` bounds ``E||Q(x) - x||^2 / ||x||^2``; it is 0 for the
    identity quantizer and the closed-form bound derived in the module
    docstring for the stochastic-uniform one.
    """

    kind: str
    bits: int = 0
    zeta: float = 0.0
    scaling: str = "l2"

    def __post_init__(self):
        if self.kind not in (IDENTITY, STOCHASTIC_UNIFORM):
            raise ValueError(f"unknown quantizer kind {self.kind!r}")
        if self.kind == IDENTITY and self.zeta != 0.0:
            raise ValueError("identity quantizer must have zeta = 0")
        if self.kind == STOCHASTIC_UNIFORM and self.bits < 1:
            raise ValueError(f"stochastic-uniform quantizer needs bits >= 1, got {self.bits}")
        if self.scaling not in ("l2", "linf"):
            raise ValueError(f"scaling must be 'l2' or 'linf', got {self.scaling!r}")

    @property
    def levels(self):
        """Grid levels per unit of scale, ``2**bits - 1``."""
        return (1 << self.bits) - 1


@dataclass(frozen=True)
class ErasureSpec:
    """Bernoulli uplink: each packet survives independently w.p. ``p``."""

    p: float

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise ValueError(f"success probability must be in (0, 1], got {self.p}")


def identity_quantizer():
    """Spec of the lossless pass-through quantizer."""
    return QuantizerSpec(kind=IDENTITY, bits=0, zeta=0.0)


def uniform_quantizer(bits, dim, scaling="l2"):
    """Spec of a stochastic-uniform quantizer for ``dim``-vectors."""
    if bits < 1:
        raise ValueError(f"stochastic-uniform quantizer needs bits >= 1, got {bits}")
    s = (1 << bits) - 1
    if scaling == "l2":
        zeta = min(dim / s**2, np.sqrt(dim) / s)
    else:
        zeta = dim / (4.0 * s**2)
    return QuantizerSpec(kind=STOCHASTIC_UNIFORM, bits=bits, zeta=float(zeta), scaling=scaling)


def _scales(spec, X):
    if spec.scaling == "l2":
        return np.sqrt((X * X).sum(axis=1))
    return np.abs(X).max(axis=1)


def quantize_batch(spec, X, U):
    """Quantize each row of ``X`` using the uniform variates ``U``.

    ``U`` must have the shape of ``X``; one variate per component is
    consumed regardless of the component's value, so callers can
    account stream positions without inspecting the data.  Rows of
    zeros map to zeros exactly.
    """
    X = np.asarray(X, dtype=np.float64)
    if spec.kind == IDENTITY:
        return X.copy()
    if U.shape != X.shape:
        raise ValueError(f"uniform block shape {U.shape} does not match data {X.shape}")
    s = spec.levels
    scale = _scales(spec, X)
    safe = np.where(scale > 0.0, scale, 1.0)
    y = np.abs(X) * (s / safe[:, None])
    lower = np.floor(y)
    level = lower + (U < (y - lower))
    out = np.sign(X) * level * (safe[:, None] / s)
    out[scale == 0.0] = 0.0
    return out


def quantize(spec, x, stream):
    """Quantize one vector, drawing its rounding noise from ``stream``.

    Consumes ``len(x)`` uniforms for the stochastic-uniform kind and
    none for the identity kind.

    Raises
    ------
    NonFiniteInput
        ``x`` contains NaN or infinity.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.isfinite(x).all():
        raise NonFiniteInput("quantizer input contains non-finite values")
    if spec.kind == IDENTITY:
        return x.copy()
    U = stream.random(x.shape)
    return quantize_batch(spec, x[None, :], U[None, :])[0]


def erasure_mask(spec, n_agents, stream):
    """One Bernoulli success bit per agent.

    Draws ``n_agents`` uniforms when ``p < 1``; the all-ones mask of a
    lossless channel consumes nothing, matching the federation loop.
    """
    if n_agents < 1:
        raise ValueError(f"need at least one agent, got {n_agents}")
    if spec.p >= 1.0:
        return np.ones(n_agents, dtype=np.uint8)
    return (stream.random(n_agents) < spec.p).astype(np.uint8)


def uplink_bits(spec, dim):
    """Accounted bits per agent per iteration (diagnostic only)."""
    if spec.kind == IDENTITY:
        return dim * 64
    return dim * spec.bits + SCALE_EXPONENT_BITS
