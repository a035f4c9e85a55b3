"""TOML run-configuration files.

Tables mirror the run-config fields::

    [model]                 # synthetic: n, m, gamma, seed -- or path = "model.json"
    [run]                   # N, T, alpha (or schedule = "horizon-matched"), master_seed, s0, name
    [run.quantizer]         # kind, bits, scaling
    [run.erasure]           # p
    [sweep]                 # optional lists over N, p, bits, alpha
    [output]                # dir, seeds

Every key has a default; an empty file is a valid configuration.
"""

import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from . import experiments
from .channel import ErasureSpec, identity_quantizer, uniform_quantizer
from .errors import QFedTDError
from .federation import HorizonMatchedStep, RunConfig
from .mrp import compute_oracles, generate_synthetic, load_model


class ConfigError(QFedTDError):
    """A configuration file is malformed or inconsistent."""


def _section(doc, key):
    value = doc.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"[{key}] must be a table")
    return value


def _load_model(model_tbl, base_dir):
    if "path" in model_tbl:
        path = Path(model_tbl["path"])
        if not path.is_absolute():
            path = base_dir / path
        mrp, phi = load_model(path)
    else:
        mrp, phi = generate_synthetic(
            n=int(model_tbl.get("n", experiments.DEFAULT_STATES)),
            m=int(model_tbl.get("m", experiments.DEFAULT_FEATURES)),
            gamma=float(model_tbl.get("gamma", experiments.DEFAULT_GAMMA)),
            seed=int(model_tbl.get("seed", experiments.DEFAULT_MODEL_SEED)),
        )
    return mrp, phi, compute_oracles(mrp, phi)


def _load_quantizer(tbl, m):
    kind = tbl.get("kind", "stochastic-uniform")
    if kind == "identity":
        return identity_quantizer()
    if kind == "stochastic-uniform":
        return uniform_quantizer(bits=int(tbl.get("bits", experiments.DEFAULT_BITS)),
                                 dim=m, scaling=tbl.get("scaling", "l2"))
    raise ConfigError(f"unknown quantizer kind {kind!r}")


def _load_run(run_tbl, m):
    if run_tbl.get("schedule") == "horizon-matched":
        alpha = HorizonMatchedStep()
    elif "schedule" in run_tbl:
        raise ConfigError(f"unknown schedule {run_tbl['schedule']!r}")
    else:
        alpha = float(run_tbl.get("alpha", experiments.DEFAULT_ALPHA))
    theta0 = run_tbl.get("theta0")
    if theta0 is not None:
        theta0 = np.asarray(theta0, dtype=np.float64)
    return RunConfig(
        N=int(run_tbl.get("N", experiments.DEFAULT_AGENTS)),
        T=int(run_tbl.get("T", 2000)),
        alpha=alpha,
        quantizer=_load_quantizer(_section(run_tbl, "quantizer"), m),
        erasure=ErasureSpec(p=float(_section(run_tbl, "erasure").get("p", experiments.DEFAULT_P))),
        theta0=theta0,
        master_seed=int(run_tbl.get("master_seed", 0)),
        s0=int(run_tbl.get("s0", 0)),
    )


def load_config(path):
    """Parse a configuration file.

    Returns
    -------
    dict
        ``model``: (Mrp, FeatureMatrix, OracleBundle);
        ``spec``: the :class:`~qfedtd.experiments.ExperimentSpec`.

    Raises
    ------
    ConfigError
        Missing file, TOML syntax error, or invalid values.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file {path} does not exist")
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    try:
        model = _load_model(_section(doc, "model"), path.parent)
        run_tbl = _section(doc, "run")
        cfg = _load_run(run_tbl, model[1].m)
        output = _section(doc, "output")
        sweep = {k: list(v) for k, v in _section(doc, "sweep").items()}
        spec = experiments.ExperimentSpec(
            name=str(run_tbl.get("name", path.stem)),
            base=cfg,
            sweep=sweep,
            seeds=int(output.get("seeds", experiments.DEFAULT_SEEDS)),
            output_dir=Path(output.get("dir", "out")),
        )
    except (QFedTDError, ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"invalid configuration {path}: {exc}") from None
    return {"model": model, "spec": spec}
