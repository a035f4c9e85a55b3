"""Command-line front end.

Subcommands::

    run      execute the base configuration over its replicate seeds
    sweep    execute the configuration's sweep grid
    verify   property suite plus finite-time bound envelope
    figures  the three stock convergence experiments (fig1 fig2 fig3)
    plot     re-render the SVG chart for an existing result CSV

Exit status: 0 on success, 1 on usage or validation errors, 2 when a
verification check fails.  ``--threads`` (or the environment variable
``QFEDTD_THREADS``) only changes wall-clock time; outputs are byte
identical for any worker count.
"""

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments, verify
from .config import ConfigError, load_config
from .errors import QFedTDError

log = logging.getLogger(__name__)

_FIGURES = {
    "fig1": (experiments.figure_speedup, "speedup under channel effects"),
    "fig2": (experiments.figure_erasure, "erasure-probability comparison"),
    "fig3": (experiments.figure_quantization, "bit-budget comparison"),
}


class _Parser(argparse.ArgumentParser):
    # Usage problems exit 1; status 2 is reserved for failed verification.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(self._diagnose(message))

    def _diagnose(self, message):
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        return 1


def _build_parser():
    parser = _Parser(prog="qfedtd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config_required):
        p.add_argument("--config", type=Path, required=config_required,
                       help="TOML configuration file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the master seed")
        p.add_argument("--out", type=Path, default=None,
                       help="override the output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes (speed only; default 1 or QFEDTD_THREADS)")
        p.add_argument("--format", choices=["csv"], default="csv",
                       help="tabular output format")

    common(sub.add_parser("run", help="run the base configuration"), True)
    common(sub.add_parser("sweep", help="run the sweep grid"), True)

    p_verify = sub.add_parser("verify", help="property suite and bound envelope")
    common(p_verify, False)
    p_verify.add_argument("--trials", type=int, default=10_000,
                          help="randomized trials per property")

    p_fig = sub.add_parser("figures", help="stock convergence experiments")
    p_fig.add_argument("which", choices=[*_FIGURES, "all"])
    common(p_fig, False)

    p_plot = sub.add_parser("plot", help="CSV to SVG")
    p_plot.add_argument("csv", type=Path, help="result CSV to render")
    p_plot.add_argument("--out", type=Path, default=None,
                        help="output directory (default: alongside the CSV)")
    p_plot.add_argument("--threads", type=int, default=None, help=argparse.SUPPRESS)
    return parser


def _threads(args):
    if getattr(args, "threads", None):
        return max(1, args.threads)
    env = os.environ.get("QFEDTD_THREADS", "")
    return max(1, int(env)) if env.isdigit() else 1


def _load(args):
    if args.config is not None:
        loaded = load_config(args.config)
        model, spec = loaded["model"], loaded["spec"]
    else:
        model = experiments.default_model()
        spec = experiments.default_experiment("default", "out")
    if args.seed is not None:
        spec = replace(spec, base=spec.base.with_seed(args.seed))
    if args.out is not None:
        spec = replace(spec, output_dir=Path(args.out))
    return model, spec


def _cmd_run(args):
    model, spec = _load(args)
    mrp, phi, oracle = model
    rows = experiments.run_table([(spec.name, spec.base)], mrp, phi, oracle,
                                 spec.seeds, threads=_threads(args))
    path = experiments.write_csv(spec.output_dir / f"{spec.name}.csv", rows)
    print(f"wrote {path} ({spec.seeds} seeds x {spec.base.T} iterations)")
    return 0


def _cmd_sweep(args):
    model, spec = _load(args)
    mrp, phi, oracle = model
    entries = experiments.expand_grid(spec, phi.m)
    rows = experiments.run_table(entries, mrp, phi, oracle, spec.seeds,
                                 threads=_threads(args))
    path = experiments.write_csv(spec.output_dir / f"{spec.name}.csv", rows)
    print(f"wrote {path} ({len(entries)} configs x {spec.seeds} seeds)")
    return 0


def _cmd_verify(args):
    model, spec = _load(args)
    mrp, phi, oracle = model
    report = verify.run_property_suite(mrp, phi, oracle, trials=args.trials,
                                       seed=spec.base.master_seed)
    zeta_prime = max(1.0, spec.base.quantizer.zeta)
    alpha, tau = verify.compliant_step_size(mrp, oracle, zeta_prime)
    envelope_cfg = replace(spec.base, alpha=alpha, T=max(2 * tau, 400))
    report.append(verify.verify_bound_envelope(envelope_cfg, mrp, phi, oracle,
                                               seeds=spec.seeds))
    failed = False
    for entry in report:
        line = f"{entry['status']:>8}  {entry['property']}"
        if "worst_slack" in entry:
            line += f"  (worst slack {entry['worst_slack']:.3e}, {entry['trials']} trials)"
        else:
            line += (f"  (measured {entry['mean_delta_sq']:.6g}"
                     f" <= bound {entry['bound']:.6g})")
        print(line)
        failed |= entry["status"] == "FAIL"
    out_dir = Path(args.out) if args.out else spec.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "verify_report.json"
    report_path.write_text(verify.report_to_json(report), encoding="utf-8")
    print(f"wrote {report_path}")
    return 2 if failed else 0


def _cmd_figures(args):
    model, spec = _load(args)
    which = list(_FIGURES) if args.which == "all" else [args.which]
    for name in which:
        builder, blurb = _FIGURES[name]
        fig_spec = replace(spec, name=name)
        result = builder(fig_spec, model=model, threads=_threads(args))
        print(f"{name}: wrote {result['csv']} and {result['svg']} ({blurb})")
        for run_id, level in sorted(result["plateaus"].items()):
            print(f"  plateau {run_id}: {level:.6g}")
    return 0


def _cmd_plot(args):
    if not args.csv.is_file():
        raise ConfigError(f"result file {args.csv} does not exist")
    out_dir = args.out if args.out else args.csv.parent
    svg = experiments.svg_from_csv(args.csv, Path(out_dir) / (args.csv.stem + ".svg"),
                                   title=args.csv.stem)
    print(f"wrote {svg}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "figures": _cmd_figures,
    "plot": _cmd_plot,
}


def cli_main(argv=None):
    """Entry point; returns the process exit status."""
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, QFedTDError) as exc:
        print(f"qfedtd: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"qfedtd: error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
