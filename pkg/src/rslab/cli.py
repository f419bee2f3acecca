"""Command line entry point: ``rslab``."""
import argparse
import os
import sys
import time

from . import kernels
from .config import ConfigError, ExperimentConfig
from .lab import HypothesisError, run, shipped_config

_SHORTCUTS = {
    "verify-omega": "relaxation_suite",
    "halanay": "halanay_suite",
    "decay": "decay_family",
}


def _add_overrides(p):
    p.add_argument("--out", help="output directory (default runs/<kind>)")
    p.add_argument("--seed", type=int)
    p.add_argument("--horizon", type=float, help="override grid.T")
    p.add_argument("--modes", type=int, help="override domain.N")
    p.add_argument("--grid-h", type=float, dest="grid_h", help="override grid.h")
    p.add_argument("-q", "--quiet", action="store_true", help="print only the verdict")


def build_parser():
    ap = argparse.ArgumentParser(prog="rslab", description="Relaxation-function stability lab")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    _add_overrides(p)
    for name, kind in _SHORTCUTS.items():
        p = sub.add_parser(name, help=f"run a {kind} config (shipped one by default)")
        p.add_argument("config", nargs="?")
        _add_overrides(p)
    sub.add_parser("configs", help="list shipped configs")
    return ap


def execute(args, stream=None):
    """Run a parsed command; returns the exit code."""
    stream = stream or sys.stdout
    if args.command == "configs":
        from .lab import shipped_configs
        for path in shipped_configs():
            print(path, file=stream)
        return 0
    path = args.config
    if path is None:
        path = shipped_config(_SHORTCUTS[args.command])
    try:
        cfg = ExperimentConfig.from_file(path)
    except (OSError, ConfigError) as exc:
        print(f"rslab: {exc}", file=sys.stderr)
        return 2
    expected = _SHORTCUTS.get(args.command)
    if expected and cfg.kind != expected:
        print(f"rslab: {args.command} expects a {expected} config, got {cfg.kind}", file=sys.stderr)
        return 2
    cfg.apply_overrides(seed=args.seed, horizon=args.horizon, modes=args.modes,
                        grid_h=args.grid_h, out=args.out)
    out = cfg.out or os.path.join("runs", cfg.kind)
    t0 = time.perf_counter()
    try:
        rec = run(cfg)
    except HypothesisError as exc:
        print(f"rslab: hypothesis fails, run refused: {exc}", file=sys.stderr)
        return 2
    elapsed = time.perf_counter() - t0
    rec.write(out, csv_stride=int(cfg.get("experiment", "csv_stride", 1)))
    if not args.quiet:
        for line in rec.lines():
            print(line, file=stream)
    n_fail = sum(not r.passed for r in rec.reports)
    print(f"{cfg.kind}: {'PASS' if rec.verdict else 'FAIL'} "
          f"({len(rec.reports) - n_fail}/{len(rec.reports)} reports pass, "
          f"{elapsed:.1f}s, kernels={kernels.BACKEND}) -> {out}", file=stream)
    return 0 if rec.verdict else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    return execute(args)


if __name__ == "__main__":
    sys.exit(main())
