"""Command line entry point: ``bobbm <subcommand> [--config PATH] ...``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import KINDS, ExperimentConfig, HarnessError, InvalidConfigError, load_config, parse_value
from .runner import run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bobbm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", type=Path, help="flat key = value config file")
        p.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides config)")
        p.add_argument("--out", type=Path, help="JSON-lines output path (overrides config)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--plot", action="store_true", help="also write an SVG next to the output")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {"kind": args.command}
        for item in args.set:
            if "=" not in item:
                raise InvalidConfigError(f"--set expects KEY=VALUE, got {item!r}")
            key, value = item.split("=", 1)
            overrides[key.strip()] = parse_value(key.strip(), value)
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["output"] = str(args.out)
        if args.config is not None:
            cfg = load_config(args.config, **overrides)
        else:
            cfg = ExperimentConfig(**overrides)
        plot = str(Path(cfg.output).with_suffix(".svg")) if args.plot else None
        rec = run_experiment(cfg, threads=args.threads, plot=plot)
    except HarnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    summary = {"kind": cfg.kind, "status": rec.status, "estimates": rec.estimates}
    if cfg.kind in ("qi-scan", "exponents", "tail-mass", "validate"):
        summary["exact"] = rec.exact
    print(json.dumps(summary, indent=2, default=str))
    return 0 if rec.status == "ok" else 1


if __name__ == "__main__":
    sys.exit(main())
