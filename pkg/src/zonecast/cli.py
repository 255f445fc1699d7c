"""Command-line surface.

Exit codes: 0 success, 1 usage or validation failure, 2 internal error.
Every run appends a JSON line to <output_dir>/run_manifest.jsonl recording
the command, config hash, seed, and timing.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import traceback
from datetime import datetime, timezone
from pathlib import Path

from . import pipeline
from .config import ConfigError, RunConfig, load_config

DEFAULT_CONFIG = "zonecast.ini"
CONFIG_ENV_VAR = "ZONECAST_CONFIG"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract says 1
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="zonecast", description=__doc__)
    parser.add_argument(
        "--config",
        help=f"config file (INI or JSON); falls back to ${CONFIG_ENV_VAR}, then ./{DEFAULT_CONFIG}",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--seed", type=int, help="override [run] seed")
        return p

    add("simulate", "generate synthetic building telemetry into the data dir")
    add("ingest", "parse telemetry + device metadata into the canonical store")

    p = add("preprocess", "clean, impute, and downsample the canonical store")
    p.add_argument("--step", type=int, choices=(900, 3600), help="target step seconds")

    p = add("train", "select and fit per-zone forecast models")
    p.add_argument("--step", type=int, choices=(900, 3600))
    p.add_argument("--zone", action="append", help="restrict to a zone id (repeatable)")
    p.add_argument("--jobs", type=int, default=None, help="parallel zone fits (default: CPUs)")
    p.add_argument("--horizon-days", type=int, help="forecast horizon in days")

    p = add("forecast", "emit one recursive forecast trace CSV for a zone")
    p.add_argument("--zone", required=True)
    p.add_argument("--step", type=int, choices=(900, 3600))
    p.add_argument("--split", choices=("train", "val", "test"), default="val")
    p.add_argument("--window", type=int, default=0)
    p.add_argument("--horizon-days", type=int)

    p = add("evaluate", "score the model bank on held-out windows")
    p.add_argument("--step", type=int, choices=(900, 3600))
    p.add_argument("--split", choices=("train", "val", "test"), default="val")
    p.add_argument("--horizon-days", type=int)

    p = add("optimize", "run receding-horizon setpoint optimization on the synthetic plant")
    p.add_argument("--tariff", help="tariff CSV (hour_start_rfc3339,price_per_kwh)")
    p.add_argument("--hours", type=int, help="total hours to control")
    p.add_argument("--no-baseline", action="store_true", help="skip the constant-setpoint baseline")

    add("report", "collect plot-ready CSV artifacts under output/report")
    return parser


def _resolve_config(args) -> RunConfig:
    path = args.config or os.environ.get(CONFIG_ENV_VAR) or DEFAULT_CONFIG
    cfg = load_config(path)
    if getattr(args, "seed", None) is not None:
        cfg.values["run"]["seed"] = args.seed
    step = getattr(args, "step", None) or cfg.get("preprocess", "target_step_seconds")
    if getattr(args, "horizon_days", None) is not None:
        cfg.values["features"]["horizon_steps"] = args.horizon_days * 86400 // step
    return cfg


def _append_manifest(cfg: RunConfig, command: str, started: float, status: str) -> None:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    entry = {
        "command": command,
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "started_utc": datetime.fromtimestamp(started, tz=timezone.utc).isoformat(),
        "duration_s": round(time.time() - started, 3),
        "status": status,
    }
    with open(out / "run_manifest.jsonl", "a") as fh:
        fh.write(json.dumps(entry) + "\n")


def _dispatch(args, cfg: RunConfig) -> dict:
    cmd = args.command
    if cmd == "simulate":
        return pipeline.run_simulate(cfg)
    if cmd == "ingest":
        return pipeline.run_ingest(cfg)
    if cmd == "preprocess":
        return pipeline.run_preprocess(cfg, step=args.step)
    if cmd == "train":
        jobs = args.jobs if args.jobs is not None else cfg.get("run", "jobs") or os.cpu_count() or 1
        return pipeline.run_train(cfg, step=args.step, jobs=jobs, zones=args.zone)
    if cmd == "forecast":
        return pipeline.run_forecast(cfg, zone=args.zone, step=args.step, split=args.split, window=args.window)
    if cmd == "evaluate":
        return pipeline.run_evaluate(cfg, step=args.step, split=args.split)
    if cmd == "optimize":
        return pipeline.run_optimize(cfg, tariff_path=args.tariff, hours=args.hours, baseline=not args.no_baseline)
    if cmd == "report":
        return pipeline.run_report(cfg)
    raise UsageError(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    started = time.time()
    cfg = None
    try:
        cfg = _resolve_config(args)
        result = _dispatch(args, cfg)
        _append_manifest(cfg, args.command, started, "ok")
        print(json.dumps(result, indent=1, sort_keys=True, default=str))
        return 0
    except (ConfigError, UsageError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if cfg is not None:
            _append_manifest(cfg, args.command, started, f"failed: {type(exc).__name__}")
        return 1
    except Exception:
        traceback.print_exc()
        if cfg is not None:
            _append_manifest(cfg, args.command, started, "internal-error")
        return 2


if __name__ == "__main__":
    sys.exit(main())
