"""``labelwave`` command line: train, ingest, sweep, report.

Exit codes: 0 success, 2 invalid input (bad config or malformed file), 3 numeric failure.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from labelwave import harness
from labelwave.config import load_config
from labelwave.engine import save_checkpoint
from labelwave.errors import LabelWaveError, NumericError
from labelwave.stopper import StopperConfig, read_trace, run_over_trace

log = logging.getLogger("labelwave")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


def _stopper_overrides(cfg, args):
    s = cfg.stopper
    k = args.k if getattr(args, "k", None) is not None else s.k
    p = args.patience if getattr(args, "patience", None) is not None else s.patience
    return replace(cfg, stopper=StopperConfig(k, p, s.steps_per_check))


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load(args):
    cfg, _ = load_config(args.config, args.set)
    return _stopper_overrides(cfg, args)


def cmd_train(args):
    cfg = _load(args)
    seed = cfg.engine.seed
    out = Path(args.out or cfg.harness.output_dir) / f"{cfg.fingerprint()}-s{seed}"
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "effective_config.json", cfg.to_dict())
    record = harness.run_experiment(cfg)
    record.to_csv(out / "run.csv")
    report = harness.selection_report(record, cfg.stopper, cfg.harness.holdout_fraction or None)
    payload = report.to_dict()
    payload["fingerprint"] = record.fingerprint
    payload["seed"] = seed
    payload["corruption"] = record.config.get("corruption")
    _write_json(out / "report.json", payload)
    harness.write_plot_data(record, out / "plots")
    if "label_wave" in record.checkpoints and not report.label_wave_status == "exhausted":
        epoch, params = record.checkpoints["label_wave"]
        save_checkpoint(out / "theta_star.ckpt", params, epoch)
    print(json.dumps({"out": str(out), **payload["label_wave"]}, sort_keys=True))
    return EXIT_OK


def cmd_ingest(args):
    cfg = StopperConfig(
        args.k if args.k is not None else 3,
        args.patience if args.patience is not None else 10,
        args.steps,
    )
    trace = read_trace(args.trace)
    result = run_over_trace(trace, cfg)
    print(json.dumps(result.as_dict(), sort_keys=True))
    return EXIT_OK


def cmd_sweep(args):
    cfg = _load(args)
    out = Path(args.out or cfg.harness.output_dir) / f"sweep-{cfg.fingerprint()}"
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "effective_config.json", cfg.to_dict())
    rows = harness.noise_rate_sweep(cfg, out_dir=out)
    harness.write_rows(out / "gain_table.csv", rows, harness.SWEEP_COLUMNS)
    surface = harness.gain_surface(rows)
    harness.write_rows(
        out / "gain_surface.csv", surface,
        ("noise_rate", "holdout_fraction", "mean_gain", "std_gain", "n", "exhausted"),
    )
    _write_json(out / "correlation.json", harness.sweep_correlations(rows))
    print(json.dumps({"out": str(out), "cells": len(rows)}, sort_keys=True))
    return EXIT_OK


def cmd_report(args):
    """Regenerate report.json from an archived run directory."""
    run_dir = Path(args.run)
    csv_path = run_dir / "run.csv" if run_dir.is_dir() else run_dir
    record = harness.RunRecord.from_csv(csv_path)
    stopper = StopperConfig()
    fraction = None
    cfg_path = csv_path.parent / "effective_config.json"
    if cfg_path.exists():
        raw = json.loads(cfg_path.read_text("utf-8"))
        stopper = StopperConfig(**raw["stopper"])
        fraction = raw["harness"].get("holdout_fraction") or None
    stopper = StopperConfig(
        args.k if args.k is not None else stopper.k,
        args.patience if args.patience is not None else stopper.patience,
        stopper.steps_per_check,
    )
    payload = harness.selection_report(record, stopper, fraction).to_dict()
    if args.write:
        _write_json(csv_path.parent / "report.json", payload)
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="labelwave", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def stopper_flags(p):
        p.add_argument("--k", type=int, default=None, help="moving-average window")
        p.add_argument("--patience", type=int, default=None)

    def config_flags(p):
        p.add_argument("--config", default=None, help="JSON config (default: bundled desk config)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted override, e.g. engine.seed=2 (repeatable)")
        p.add_argument("--out", default=None, help="output root directory")

    p = sub.add_parser("train", help="run one experiment and all selectors")
    config_flags(p)
    stopper_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ingest", help="run the stopper over an external prediction trace")
    p.add_argument("trace")
    stopper_flags(p)
    p.add_argument("--steps", type=int, default=1, help="use every n-th snapshot")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("sweep", help="noise-rate x holdout-fraction gain table")
    config_flags(p)
    stopper_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="regenerate a report from an archived run")
    p.add_argument("run", help="run directory or run.csv")
    stopper_flags(p)
    p.add_argument("--write", action="store_true", help="overwrite report.json next to the CSV")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (LabelWaveError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
