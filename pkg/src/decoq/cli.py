"""Command-line entry point: ``decoq td|simulate|validate|fig1|sweep``.

Exit codes: 0 success, 2 config error, 3 capacity/truncation, 4 validation FAIL.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import runner
from .config import ConfigError, RunSettings, load_config
from .errors import CapacityError, TruncationError, UsageError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_FAIL = 4


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _out_path(args, cfg) -> str | None:
    return args.out or (cfg.output.path if cfg is not None else None)


def _report_text(report: dict, fmt: str) -> str:
    if fmt == "json":
        return runner.to_json(report)
    lines = ["quantity,value"]
    for key, value in sorted(_flatten(report).items()):
        if isinstance(value, float):
            value = runner.fmt(value)
        elif isinstance(value, str) and ("," in value or '"' in value):
            value = '"' + value.replace('"', '""') + '"'
        lines.append(f"{key},{value}")
    return "\n".join(lines) + "\n"


def _flatten(obj, prefix: str = "") -> dict:
    out = {}
    items = obj.items() if isinstance(obj, dict) else enumerate(obj)
    for key, value in items:
        name = f"{prefix}{key}"
        if isinstance(value, (dict, list)):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


def cmd_td(args) -> int:
    cfg = load_config(args.config)
    report = runner.td_report(cfg)
    _write(_report_text(report, cfg.output.format), _out_path(args, cfg))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    series = runner.simulate_series(cfg)
    text = runner.series_to_json(series) if cfg.output.format == "json" else runner.series_to_csv(series)
    _write(text, _out_path(args, cfg))
    if series.meta.get("truncation_flag"):
        print(
            f"warning: {series.meta['edge_population']:.3g} of the bath weight reached the top Fock levels; "
            "increase truncation",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    report = runner.validate_report(cfg)
    _write(_report_text(report, cfg.output.format), _out_path(args, cfg))
    return EXIT_OK if report["status"] == "PASS" else EXIT_FAIL


def cmd_fig1(args) -> int:
    run = RunSettings()
    if args.config:
        run = load_config(args.config).run
    outdir = args.out or "fig1"
    series, summary = runner.fig1_series(run)
    for name, s in series.items():
        _write(runner.series_to_csv(s), os.path.join(outdir, f"{name}.csv"))
    _write(runner.to_json(summary), os.path.join(outdir, "summary.json"))
    sys.stdout.write(runner.to_json(summary))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    rows, slopes = runner.sweep_rows(cfg, args.workers)
    if cfg.output.format == "json":
        text = runner.to_json({"command": "sweep", "parameter": cfg.sweep.parameter, "rows": rows, "slopes": slopes})
    else:
        text = runner.rows_to_csv(rows)
    _write(text, _out_path(args, cfg))
    if slopes and cfg.output.format == "csv":
        print("log-log slopes: " + ", ".join(f"{k}={runner.fmt(v) if v is not None else 'n/a'}" for k, v in slopes.items()), file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "td": cmd_td,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "fig1": cmd_fig1,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decoq", description="Short-time decoherence scales t_d.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON experiment config (optional for fig1)")
    parser.add_argument("--out", help="output file (directory for fig1); default stdout or output.path")
    parser.add_argument("--workers", type=int, default=None, help="sweep worker processes (default: logical cores)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command != "fig1" and not args.config:
        print("error: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapacityError, TruncationError) as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except UsageError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
