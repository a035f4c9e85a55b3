"""The uplink in isolation: stochastic quantization and erasures.

Monte-Carlo estimates confirm the two quantizer guarantees (exact mean,
bounded relative distortion) and the Bernoulli statistics of the mask.
"""

import numpy as np

from qfedtd import ErasureSpec, erasure_mask, quantize, uniform_quantizer, uplink_bits
from qfedtd import streams
from qfedtd.channel import quantize_batch

rng = streams.stream(2, streams.PROBE)
x = rng.standard_normal(10)
draws = 200_000

print("input vector:", np.round(x, 3))
for bits in (3, 4, 5):
    spec = uniform_quantizer(bits, dim=10)
    U = rng.random((draws, 10))
    Q = quantize_batch(spec, np.broadcast_to(x, (draws, 10)), U)
    bias = np.abs(Q.mean(axis=0) - x).max()
    ratio = ((Q - x) ** 2).sum(axis=1).mean() / (x * x).sum()
    print(f"{bits} bits: levels={spec.levels:2d}  worst-case zeta={spec.zeta:.4f}  "
          f"measured distortion={ratio:.4f}  max |bias|={bias:.2e}  "
          f"uplink bits/vector={uplink_bits(spec, 10)}")

# A single quantized upload lands on the scale grid.
spec = uniform_quantizer(2, dim=10)
q = quantize(spec, x, streams.stream(0, streams.QUANT))
print("2-bit upload:", np.round(q, 3))

# Erasures: i.i.d. Bernoulli per agent and iteration.
mask_gen = streams.stream(0, streams.MASK)
rates = [erasure_mask(ErasureSpec(p=0.6), 40, mask_gen).mean() for _ in range(10_000)]
print("measured delivery rate at p=0.6 over 400k packets:", round(float(np.mean(rates)), 4))
