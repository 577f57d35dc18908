"""Command-line entry points: train, scan, heuristic and plot.

Settings may come from a plain key/value config file (``key = value``
lines mirroring the long flag names); explicit command-line flags win
over file entries, which win over built-in defaults. The train and scan
commands write delimited outputs into the chosen directory and, with
``--plots``, render figures alongside them.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .data import _MODE_ALIASES
from .harness import (ExperimentConfig, ScanConfig, emit_outputs,
                      emit_scan_outputs, load_dataset, run_repeated,
                      run_scan_experiment)
from .model import ACTIVATIONS, HEADS, hidden_units_heuristic

OPTIMIZERS = ("sgd", "sgdm", "nag", "adagrad", "adadelta", "adam", "lbfgs")
STEPS = ("golsi", "small", "medium", "large")


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"cannot parse boolean value {text!r}")


def read_config_file(path) -> dict:
    """key = value lines; '#' starts a comment; keys match the long flags."""
    values = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}: line {line_no}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip().lower().replace("-", "_")] = val.strip()
    return values


_FILE_PARSERS = {
    "iters": int, "batch": int, "runs": int, "seed": int,
    "hidden_layers": int, "hidden_nodes": int, "log_every": int,
    "grid_count": int,
    "beta1": float, "gamma": float, "grid_start": float, "grid_step": float,
    "paper_literal": _parse_bool, "standard_bias_correction": _parse_bool,
    "reuse_f0": _parse_bool, "halt_on_nonfinite": _parse_bool,
    "plots": _parse_bool,
}


def _merge_settings(cli: dict, file_values: dict, fields: set) -> dict:
    """CLI overrides file; unknown file keys are rejected."""
    merged = {}
    for key, text in file_values.items():
        if key not in fields:
            raise ValueError(f"unknown config key {key!r}")
        parser = _FILE_PARSERS.get(key, str)
        merged[key] = parser(text)
    for key, value in cli.items():
        if value is not None and key in fields:
            merged[key] = value
    return merged


def _config_fields(cls) -> set:
    return {f.name for f in dataclasses.fields(cls)}


def _add_common_train_flags(p):
    p.add_argument("--config", help="key/value settings file; flags override it")
    p.add_argument("--dataset", help="prepared dataset CSV (manifest alongside)")
    p.add_argument("--manifest", help="manifest path (default: <dataset>.manifest)")
    p.add_argument("--out", help="output directory (default gols-out)")
    p.add_argument("--plots", action="store_true", default=None,
                   help="render figures next to the CSV outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gols",
        description="Train networks with gradient-only line-search step sizes, "
                    "and analyze step-size landscapes under mini-batch "
                    "sub-sampling.")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run repeated training experiments")
    _add_common_train_flags(t)
    t.add_argument("--optimizer", help="one of %s, or a comma-separated list"
                   % "|".join(OPTIMIZERS))
    t.add_argument("--step", help="golsi or a fixed regime small|medium|large; "
                   "comma-separated list allowed")
    t.add_argument("--iters", type=int)
    t.add_argument("--batch", type=int)
    t.add_argument("--batch-mode", choices=sorted(set(_MODE_ALIASES)))
    t.add_argument("--runs", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--hidden-layers", type=int)
    t.add_argument("--hidden-nodes", type=int)
    t.add_argument("--loss", choices=HEADS)
    t.add_argument("--activation", choices=ACTIVATIONS)
    t.add_argument("--beta1", type=float)
    t.add_argument("--gamma", type=float)
    t.add_argument("--paper-literal", action="store_true", default=None)
    t.add_argument("--standard-bias-correction", action="store_true", default=None)
    t.add_argument("--fresh-f0", action="store_true", default=None,
                   help="re-evaluate F'(0) each line search instead of reusing "
                        "the direction gradient")
    t.add_argument("--log-every", type=int)
    t.add_argument("--halt-on-nonfinite", action="store_true", default=None)

    s = sub.add_parser("scan", help="directional scans and event densities")
    _add_common_train_flags(s)
    s.add_argument("--grid-start", type=float)
    s.add_argument("--grid-step", type=float)
    s.add_argument("--grid-count", type=int)
    s.add_argument("--batch-sizes", help="comma-separated batch sizes")
    s.add_argument("--batch-mode", choices=sorted(set(_MODE_ALIASES)))
    s.add_argument("--runs", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--hidden-nodes", type=int)
    s.add_argument("--loss", choices=HEADS)
    s.add_argument("--activation", choices=ACTIVATIONS)
    s.add_argument("--reference", help="bundled reference ray CSV (columns x,d)")

    h = sub.add_parser("heuristic", help="print the hidden-layer width rule")
    h.add_argument("--m", type=int, required=True, help="observations")
    h.add_argument("--d", type=int, required=True, help="input features")
    h.add_argument("--k", type=int, required=True, help="classes")
    h.add_argument("--cr", type=float, default=1.5, help="regression constant")

    p = sub.add_parser("plot", help="re-render figures from emitted CSVs")
    p.add_argument("--in", dest="in_dir", required=True,
                   help="directory holding curve/scan CSVs")
    p.add_argument("--out", help="figure directory (default: same as --in)")

    return parser


def _gather_cli(args, keys) -> dict:
    return {key: getattr(args, key, None) for key in keys}


def _split_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def cmd_train(args) -> int:
    file_values = read_config_file(args.config) if args.config else {}
    fields = _config_fields(ExperimentConfig) | {"plots"}
    cli = _gather_cli(args, fields - {"reuse_f0"})
    cli["plots"] = args.plots
    if args.fresh_f0:
        cli["reuse_f0"] = False
    settings = _merge_settings(cli, file_values, fields)
    plots = settings.pop("plots", False) or False
    if "dataset" not in settings:
        print("error: --dataset is required (flag or config file)", file=sys.stderr)
        return 2
    optimizers = _split_list(settings.pop("optimizer", "sgd") or "sgd")
    steps = _split_list(settings.pop("step", "golsi") or "golsi")
    for opt in optimizers:
        if opt not in OPTIMIZERS:
            print(f"error: unknown optimizer {opt!r}", file=sys.stderr)
            return 2
    for step in steps:
        if step not in STEPS:
            print(f"error: unknown step rule {step!r}", file=sys.stderr)
            return 2
    out_dir = settings.pop("out", None) or "gols-out"

    dataset, schema = load_dataset(settings["dataset"], settings.get("manifest"))
    results = []
    for opt in optimizers:
        for step in steps:
            cfg = ExperimentConfig(**settings, optimizer=opt, step=step,
                                   out=out_dir)
            cfg.validate()
            results.append(run_repeated(cfg, dataset, schema))
    written = emit_outputs(results, out_dir, plots=plots)
    for res in results:
        s = res.summary()
        print(f"{s['tag']}: final train loss {s['final_train_loss']:.6g}, "
              f"mean evals/iter {s['mean_evals_per_iter']:.3g}")
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_scan(args) -> int:
    file_values = read_config_file(args.config) if args.config else {}
    fields = _config_fields(ScanConfig) | {"plots", "batch_sizes"}
    cli = _gather_cli(args, fields)
    cli["plots"] = args.plots
    settings = _merge_settings(cli, file_values, fields)
    plots = settings.pop("plots", False) or False
    if "dataset" not in settings:
        print("error: --dataset is required (flag or config file)", file=sys.stderr)
        return 2
    sizes = settings.pop("batch_sizes", None)
    if sizes is not None:
        settings["batch_sizes"] = tuple(int(v) for v in _split_list(str(sizes)))
    out_dir = settings.pop("out", None) or "gols-out"
    cfg = ScanConfig(**settings, out=out_dir)
    cfg.validate()
    result = run_scan_experiment(cfg)
    written = emit_scan_outputs(result, out_dir, plots=plots)
    for b, (pdf_snn, pdf_min) in sorted(result.pdfs.items()):
        print(f"|B|={b}: sign-change support width {pdf_snn.support_width:.4g}, "
              f"occupancy {pdf_snn.occupied_fraction:.2%} vs local-min "
              f"occupancy {pdf_min.occupied_fraction:.2%}")
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_heuristic(args) -> int:
    print(hidden_units_heuristic(args.m, args.d, args.k, args.cr))
    return 0


def cmd_plot(args) -> int:
    from . import plots as plotting
    written = plotting.render_from_directory(args.in_dir, args.out)
    for path in written:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(args)
        if args.command == "scan":
            return cmd_scan(args)
        if args.command == "heuristic":
            return cmd_heuristic(args)
        return cmd_plot(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
