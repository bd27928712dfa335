"""Command-line figure rendering from trajectory logs.

Usage: wheeldrone-plot --log PATH [--log2 PATH] --scenario PATH
       --kind {timeseries,thrust,trajectory3d,ablation} --out PATH
"""

from __future__ import annotations

import argparse
import sys

from .logdata import LogFormatError, load_scenario, load_trajectory
from .render import render_ablation, render_thrust, render_timeseries, render_trajectory3d

KINDS = ("timeseries", "thrust", "trajectory3d", "ablation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wheeldrone-plot", description="Render figures from wheeldrone trajectory logs"
    )
    parser.add_argument("--log", required=True, help="trajectory CSV path")
    parser.add_argument("--log2", default=None, help="second log (ablation comparison)")
    parser.add_argument("--scenario", required=True, help="scenario JSON path")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument(
        "--inflation",
        type=float,
        default=None,
        help="collision offset for drawn obstacles (default: stock vehicle geometry)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        traj = load_trajectory(args.log)
        scenario = load_scenario(args.scenario, inflation=args.inflation)
        if args.kind == "timeseries":
            render_timeseries(traj, scenario, args.out)
        elif args.kind == "thrust":
            render_thrust(traj, args.out)
        elif args.kind == "trajectory3d":
            render_trajectory3d(traj, scenario, args.out)
        else:
            if args.log2 is None:
                print("error: --kind ablation requires --log2", file=sys.stderr)
                return 2
            traj2 = load_trajectory(args.log2)
            render_ablation(traj, traj2, scenario, args.out)
    except (LogFormatError, OSError, KeyError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
