"""Regenerate the three stock convergence figures (reduced seed count).

fig1: lossless vs constrained uplinks at N=1 and N=40 (speedup),
fig2: packet-success probabilities 0.3 / 0.6 / 0.9 (rate slowdown),
fig3: 3 / 4 / 5 bits per component (plateau inflation).

The full 32-seed versions run via ``qfedtd figures all``.
"""

from pathlib import Path

from qfedtd.experiments import (
    default_experiment,
    default_model,
    figure_erasure,
    figure_quantization,
    figure_speedup,
)

out = Path(__file__).resolve().parent / "out"
model = default_model()

for name, builder in [("fig1", figure_speedup), ("fig2", figure_erasure),
                      ("fig3", figure_quantization)]:
    spec = default_experiment(name, out, seeds=8, T=2000)
    result = builder(spec, model=model)
    print(f"{name}: wrote {result['csv'].name} and {result['svg'].name}")
    for run_id, level in sorted(result["plateaus"].items()):
        print(f"   plateau {run_id}: {level:.6f}")
