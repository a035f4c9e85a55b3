"""Experiment orchestration: seeds, sweeps, CSV persistence, figures.

A run table is a list of ``(run_id, RunConfig)`` entries executed over
a number of replicate seeds.  Results land in a single CSV with schema

    run_id,seed,k,N,p,bits,alpha,delta_sq

sorted by ``(run_id, seed, k)``; the ``seed`` column is the replicate
index (the concrete master seed derives from it deterministically).
Replicates may execute in parallel worker processes; the worker count
changes timing only, never bytes.

The three stock experiments reproduce the qualitative convergence
phenomena: agent-count speedup, erasure-probability rate slowdown, and
quantization-level plateau inflation.
"""

import itertools
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import streams
from .channel import ErasureSpec, identity_quantizer, uniform_quantizer
from .federation import RunConfig, resolve_step_size, run_qfedtd
from .mrp import compute_oracles, generate_synthetic
from .svgplot import render_curves_svg

CSV_HEADER = "run_id,seed,k,N,p,bits,alpha,delta_sq"

# Stock model dimensions for the figure experiments.
DEFAULT_STATES = 20
DEFAULT_FEATURES = 10
DEFAULT_GAMMA = 0.5
DEFAULT_MODEL_SEED = 7
DEFAULT_ALPHA = 0.6
DEFAULT_AGENTS = 40
DEFAULT_BITS = 4
DEFAULT_P = 0.6
DEFAULT_SEEDS = 32

_SWEEP_KEYS = ("N", "p", "bits", "alpha")


@dataclass(frozen=True)
class ExperimentSpec:
    """A named run table: base configuration, sweep grid, seed count."""

    name: str
    base: RunConfig
    sweep: dict
    seeds: int
    output_dir: Path

    def __post_init__(self):
        if self.seeds < 1:
            raise ValueError(f"need at least one seed, got {self.seeds}")
        for key, values in self.sweep.items():
            if key not in _SWEEP_KEYS:
                raise ValueError(f"unknown sweep key {key!r}; allowed: {_SWEEP_KEYS}")
            if not values:
                raise ValueError(f"sweep grid for {key!r} is empty")
        object.__setattr__(self, "output_dir", Path(self.output_dir))


def default_model(seed=DEFAULT_MODEL_SEED, n=DEFAULT_STATES, m=DEFAULT_FEATURES,
                  gamma=DEFAULT_GAMMA):
    """The stock synthetic model plus its oracles."""
    mrp, phi = generate_synthetic(n, m, gamma, seed)
    return mrp, phi, compute_oracles(mrp, phi)


def apply_axis(cfg, key, value, m):
    """Return ``cfg`` with one sweep axis changed."""
    if key == "N":
        return replace(cfg, N=int(value))
    if key == "p":
        return replace(cfg, erasure=ErasureSpec(p=float(value)))
    if key == "bits":
        bits = int(value)
        quant = identity_quantizer() if bits == 0 else uniform_quantizer(bits, m)
        return replace(cfg, quantizer=quant)
    if key == "alpha":
        return replace(cfg, alpha=float(value))
    raise ValueError(f"unknown sweep key {key!r}")


def expand_grid(spec, m):
    """Cartesian product of the sweep grid as ``(run_id, cfg)`` entries."""
    keys = [k for k in _SWEEP_KEYS if k in spec.sweep]
    if not keys:
        return [(spec.name, spec.base)]
    entries = []
    for combo in itertools.product(*(spec.sweep[k] for k in keys)):
        cfg = spec.base
        parts = []
        for key, value in zip(keys, combo):
            cfg = apply_axis(cfg, key, value, m)
            parts.append(f"{key}{value:g}" if isinstance(value, float) else f"{key}{value}")
        entries.append((f"{spec.name}_" + "_".join(parts), cfg))
    return entries


def _run_one(task):
    run_id, cfg, rep, mrp, phi, oracle = task
    run_cfg = cfg.with_seed(streams.derive_seed(cfg.master_seed, rep))
    deltas = run_qfedtd(run_cfg, mrp, phi, oracle)
    return run_id, rep, cfg, resolve_step_size(cfg, mrp, oracle), deltas


def run_table(entries, mrp, phi, oracle, seeds, threads=1):
    """Execute every (entry, replicate) pair; returns sorted result rows.

    Each result row is
    ``(run_id, seed, k, N, p, bits, alpha, delta_sq)``.
    """
    tasks = [(run_id, cfg, rep, mrp, phi, oracle)
             for run_id, cfg in entries for rep in range(seeds)]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_one, tasks, chunksize=1))
    else:
        results = [_run_one(t) for t in tasks]
    rows = []
    for run_id, rep, cfg, alpha, deltas in results:
        bits = cfg.quantizer.bits
        p = cfg.erasure.p
        for k, d in enumerate(deltas):
            rows.append((run_id, rep, k, cfg.N, p, bits, alpha, float(d)))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return rows


def write_csv(path, rows):
    """Write result rows atomically; floats use round-trip repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for run_id, seed, k, n_agents, p, bits, alpha, delta_sq in rows:
                fh.write(f"{run_id},{seed},{k},{n_agents},{p!r},{bits},{alpha!r},{delta_sq!r}\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_csv(path):
    """Read rows written by :func:`write_csv`."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        for line in fh:
            run_id, seed, k, n_agents, p, bits, alpha, delta_sq = line.rstrip("\n").split(",")
            rows.append((run_id, int(seed), int(k), int(n_agents), float(p),
                         int(bits), float(alpha), float(delta_sq)))
    return rows


def mean_curves(rows):
    """Per-run mean of ``delta_sq`` over seeds, keyed by run id."""
    sums = {}
    counts = {}
    for run_id, _seed, k, *_rest, delta_sq in rows:
        acc = sums.setdefault(run_id, {})
        cnt = counts.setdefault(run_id, {})
        acc[k] = acc.get(k, 0.0) + delta_sq
        cnt[k] = cnt.get(k, 0) + 1
    curves = {}
    for run_id, acc in sorted(sums.items()):
        ks = sorted(acc)
        curves[run_id] = np.array([acc[k] / counts[run_id][k] for k in ks])
    return curves


def plateau_level(curve, frac=0.1):
    """Steady-state level: mean over the last ``frac`` of iterations."""
    tail = max(1, int(round(len(curve) * frac)))
    return float(np.mean(curve[-tail:]))


def time_to_threshold(curve, threshold):
    """First index at which the curve is at or below the threshold."""
    hits = np.nonzero(np.asarray(curve) <= threshold)[0]
    return int(hits[0]) if hits.size else None


def svg_from_csv(csv_path, svg_path, title=""):
    """Re-render the chart for a result CSV; presentation only."""
    curves = mean_curves(read_csv(csv_path))
    doc = render_curves_svg(sorted(curves.items()), title=title,
                            xlabel="iteration k", ylabel="mean squared error")
    svg_path = Path(svg_path)
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=svg_path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(doc)
        os.replace(tmp, svg_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return svg_path


def default_experiment(name, output_dir, seeds=DEFAULT_SEEDS, T=2000,
                       master_seed=0, sweep=None):
    """Stock experiment spec with the reference simulation settings."""
    base = RunConfig(
        N=DEFAULT_AGENTS,
        T=T,
        alpha=DEFAULT_ALPHA,
        quantizer=uniform_quantizer(DEFAULT_BITS, DEFAULT_FEATURES),
        erasure=ErasureSpec(p=DEFAULT_P),
        master_seed=master_seed,
    )
    return ExperimentSpec(name=name, base=base, sweep=sweep or {}, seeds=seeds,
                          output_dir=Path(output_dir))


def _emit(spec, entries, model, threads, title):
    mrp, phi, oracle = model if model is not None else default_model()
    rows = run_table(entries, mrp, phi, oracle, spec.seeds, threads=threads)
    csv_path = write_csv(spec.output_dir / f"{spec.name}.csv", rows)
    svg_path = svg_from_csv(csv_path, spec.output_dir / f"{spec.name}.svg", title=title)
    curves = mean_curves(rows)
    return {"csv": csv_path, "svg": svg_path, "curves": curves,
            "plateaus": {rid: plateau_level(c) for rid, c in curves.items()}}


def figure_speedup(spec, model=None, threads=1):
    """Lossless vs. constrained uplinks at one and many agents.

    Four curves: plain averaging (no quantization, no erasures) and the
    constrained variant, each at N = 1 and the base agent count.
    """
    lossless = replace(spec.base, quantizer=identity_quantizer(),
                       erasure=ErasureSpec(p=1.0))
    entries = [
        (f"{spec.name}_plain_N1", replace(lossless, N=1)),
        (f"{spec.name}_plain_N{spec.base.N}", lossless),
        (f"{spec.name}_channel_N1", replace(spec.base, N=1)),
        (f"{spec.name}_channel_N{spec.base.N}", spec.base),
    ]
    return _emit(spec, entries, model, threads,
                 "Agent-count speedup under quantization and erasures")


def figure_erasure(spec, model=None, threads=1, p_grid=(0.3, 0.6, 0.9)):
    """Same run at several packet-success probabilities."""
    grid = spec.sweep.get("p", list(p_grid))
    entries = [(f"{spec.name}_p{p:g}", replace(spec.base, erasure=ErasureSpec(p=float(p))))
               for p in grid]
    return _emit(spec, entries, model, threads,
                 "Effect of the packet-success probability")


def figure_quantization(spec, model=None, threads=1, bits_grid=(3, 4, 5)):
    """Same run at several quantization resolutions."""
    grid = spec.sweep.get("bits", list(bits_grid))
    m = DEFAULT_FEATURES if model is None else model[1].m
    entries = [(f"{spec.name}_bits{int(bits)}",
                replace(spec.base, quantizer=uniform_quantizer(int(bits), m)))
               for bits in grid]
    return _emit(spec, entries, model, threads,
                 "Effect of the per-component bit budget")
