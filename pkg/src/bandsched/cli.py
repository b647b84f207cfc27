"""Command-line entry point.

Examples::

    bandsched optimize-is --preset paper-example
    bandsched run-vwap --seed 3 --out runs/vwap3
    bandsched run-discrete --config my_run.json --out runs/disc
    bandsched gen-market --seed 11 --out data/

Exit status is 0 on success, 2 when the configuration is invalid and 1 for
any other failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from typing import List, Optional

from .backtest import cmd_gen_market, cmd_optimize_is, run_continuous, run_discrete
from .config import (
    PRESETS, ConfigError, load_json, parse_optimize_config, parse_run_config,
    run_config_to_dict,
)
from .report import write_json

log = logging.getLogger("bandsched")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

_RUN_COMMANDS = {"run-vwap": "vwap", "run-pov": "pov", "run-is": "is", "run-discrete": "discrete"}


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _apply_overrides(data: dict, pairs: List[str]) -> dict:
    """Apply ``section.key=value`` overrides; values are parsed as JSON when possible."""
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set {pair!r}: expected KEY=VALUE")
        key, value = pair.split("=", 1)
        node = data
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set {key}: {p} is not a section")
        node[parts[-1]] = _parse_value(value)
    return data


def _base_document(args) -> dict:
    if args.preset is not None:
        if args.preset not in PRESETS:
            raise ConfigError(f"--preset: unknown preset {args.preset!r} "
                              f"(available: {', '.join(sorted(PRESETS))})")
        data = json.loads(json.dumps(PRESETS[args.preset]))
    else:
        data = {}
    if args.config is not None:
        loaded = load_json(args.config)
        if not isinstance(loaded, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
        data.update(loaded)
    return _apply_overrides(data, args.set or [])


def _emit(obj: dict, out: Optional[str], name: str) -> None:
    if out is not None:
        os.makedirs(out, exist_ok=True)
        write_json(os.path.join(out, name), obj)
    json.dump(obj, sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")


def _cmd_optimize(args) -> int:
    data = _base_document(args)
    if args.preset is None and args.config is None and not args.set:
        raise ConfigError("optimize-is needs --preset, --config or --set parameters")
    cfg = parse_optimize_config(data)
    _emit(cmd_optimize_is(cfg), args.out, "optimize_is.json")
    return EXIT_OK


def _cmd_run(args) -> int:
    if args.preset is not None:
        raise ConfigError(f"--preset: {args.command} has no presets")
    data = _base_document(args)
    strategy = _RUN_COMMANDS[args.command]
    if data.setdefault("strategy", strategy) != strategy:
        raise ConfigError(f"config.strategy: {data['strategy']!r} does not match {args.command}")
    if args.out is not None:
        data["out"] = args.out
    cfg = parse_run_config(data)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    out = cfg.out
    if strategy == "discrete":
        res = run_discrete(cfg, out_dir=out)
    else:
        res = run_continuous(cfg, out_dir=out)
    write_json(os.path.join(out, "config.json"), run_config_to_dict(cfg))
    log.info("wrote outputs to %s", out)
    json.dump(res.metrics, sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def _cmd_gen_market(args) -> int:
    data = _base_document(args)
    sim_data = data.get("sim", data)
    cfg = parse_run_config({"strategy": "vwap", "sim": sim_data}).sim
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    out = args.out or "market"
    _emit(cmd_gen_market(cfg, out, history_days=args.history_days), None, "")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bandsched", description="Uncertainty-band execution scheduling: "
        "optimizer, simulated backtests and reports.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="JSON config file")
        p.add_argument("--preset", metavar="NAME", help="built-in named config")
        p.add_argument("--seed", type=int, help="override the simulator seed")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config value, e.g. sim.tick_interval=2 (repeatable)")
        return p

    p = common(sub.add_parser("optimize-is", help="optimal IS duration, shape and bands"))
    p.set_defaults(func=_cmd_optimize)
    for name, strat in _RUN_COMMANDS.items():
        p = common(sub.add_parser(name, help=f"simulated {strat} backtest"))
        p.set_defaults(func=_cmd_run)
    p = common(sub.add_parser("gen-market", help="write a seeded synthetic market tape"))
    p.add_argument("--history-days", type=int, default=0,
                   help="also write this many days of volume-curve history")
    p.set_defaults(func=_cmd_gen_market)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - report and map to the runtime exit code
        log.debug("run failed", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
