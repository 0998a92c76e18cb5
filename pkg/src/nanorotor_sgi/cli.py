"""Command line entry point: ``nanorotor-sgi run|sweep [config] [options]``."""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .config import PRESETS
from .runner import EXIT_CONFIG, run_scenario, run_sweep


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nanorotor-sgi",
        description="Simulate a spinning-nanorotor Stern-Gerlach interferometer and its spin contrast.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "integrate one arm pair"), ("sweep", "run a Cartesian parameter sweep")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", nargs="?", help="key = value config file (layered over --preset)")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named preset")
        p.add_argument("--strict-bnv", action="store_true", help="use the off-centre field in the Zeeman torque too")
        p.add_argument("--fixed-step", action="store_true", help="fixed-step DP5 instead of adaptive DOPRI5 (config fixed_method = rk4 for RK4)")
        p.add_argument("--dense-grid", action="store_true", help="keep the 1e6-sample grid for quadratures")
        if name == "sweep":
            p.add_argument("--workers", type=int, default=None, help="worker processes (default: CPU count)")
    sub.add_parser("presets", help="list preset names")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    if args.command == "presets":
        for name in PRESETS:
            print(name)
        return 0
    if args.config is None and args.preset is None:
        print("error: give a config file or --preset [key: config]", file=sys.stderr)
        return EXIT_CONFIG
    common = dict(
        config_path=args.config, out_dir=args.out, preset=args.preset,
        strict_bnv=args.strict_bnv, fixed_step=args.fixed_step, dense_grid=args.dense_grid,
    )
    if args.command == "run":
        return run_scenario(**common)
    return run_sweep(max_workers=args.workers, **common)


if __name__ == "__main__":
    sys.exit(main())
