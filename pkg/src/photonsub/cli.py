"""Command-line front end: `photonsub run <config>` / `photonsub preset <name>`.

Both subcommands execute an experiment sweep and write results.csv or
results.json plus a timing.json sidecar into --out-dir.  The result
files are byte-identical across reruns with the same config and seed;
wall-clock numbers live only in the sidecar to keep it that way.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import (SPONT_VARIANT_FLAGS, parse_config, preset_config,
                     preset_names)
from .errors import ConfigError, PhotonsubError
from .runner import emit, run_experiment

__all__ = ["build_parser", "main"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonsub",
        description="Quantum-trajectory simulation of deterministic "
                    "single-photon subtraction in a QD-bimodal-cavity cascade.")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a JSON experiment config")
    run_p.add_argument("config", help="path to the config file")
    pre_p = sub.add_parser("preset", help="run a named figure preset")
    pre_p.add_argument("name", choices=preset_names())
    for p in (run_p, pre_p):
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--traj", type=int, help="override n_traj per point")
        p.add_argument("--workers", type=int, help="override worker count")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="result file format (default csv)")
        p.add_argument("--oracle", choices=("on", "off", "auto"),
                       help="density-matrix cross-check policy")
        p.add_argument("--spont-variant", choices=tuple(SPONT_VARIANT_FLAGS),
                       help="spontaneous-emission unraveling")
        p.add_argument("--long", action="store_true",
                       help="enable the large-pulse points (slow)")
    return parser


def _apply_overrides(cfg, args):
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        cfg = replace(cfg, master_seed=args.seed)
    if args.traj is not None:
        if args.traj < 1:
            raise ConfigError("--traj must be >= 1")
        cfg = replace(cfg, n_traj=args.traj)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = replace(cfg, workers=args.workers)
    if args.oracle is not None:
        cfg = replace(cfg, oracle=args.oracle)
    if args.spont_variant is not None:
        params = dict(cfg.params)
        params["spont_variant"] = SPONT_VARIANT_FLAGS[args.spont_variant]
        cfg = replace(cfg, params=params)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            text = Path(args.config).read_text()
            cfg = parse_config(text, force_long=args.long)
        else:
            cfg = preset_config(args.name, long_run=args.long)
        cfg = _apply_overrides(cfg, args)
        table, timing = run_experiment(cfg)
        out = Path(args.out_dir)
        path = emit(table, args.format, out, metadata={"config": cfg.document()})
        timing_path = out / "timing.json"
        timing_path.write_text(json.dumps(timing, indent=1) + "\n")
        print(f"{len(table.rows)} rows over {timing['points']} sweep points "
              f"in {timing['wall_clock_s']}s")
        print(f"results: {path}")
        print(f"timing:  {timing_path}")
        return 0
    except FileNotFoundError as exc:
        print(json.dumps({"error": "ConfigError",
                          "message": f"config file not found: {exc.filename}"}),
              file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(json.dumps({"error": "ConfigError", "message": str(exc)}),
              file=sys.stderr)
        return 2
    except PhotonsubError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
