"""Command-line entry point: single runs, seeded ablation batches, and
configuration validation.

Exit codes: 0 on success (run: goal reached with no collision; ablation:
auxiliary prior strictly improves the success rate), 1 on a failed run,
2 on a configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import ConfigError, RunConfig, load_config
from .simulator import run


def _write_outputs(out_dir: str, trajectory_csv: str, summary: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "trajectory.csv"), "w", newline="\n") as fh:
        fh.write(trajectory_csv)
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _execute(cfg: RunConfig, seed: int, aux_samples_override: int | None = None):
    sim = cfg.sim
    sim.seed = seed
    sim.aux_samples_override = aux_samples_override
    return run(
        cfg.scenario,
        sim,
        cfg.planner,
        cfg.params,
        aux_gains=cfg.aux_gains,
        att_gains=cfg.att_gains,
        mode_params=cfg.mode_params,
    )


def cmd_run(config_path: str, seed: int | None = None, out: str | None = None) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    use_seed = cfg.sim.seed if seed is None else seed
    log, summary = _execute(cfg, use_seed)
    out_dir = out or cfg.output_dir
    _write_outputs(out_dir, log.to_csv(), summary.to_dict())
    if summary.failed:
        print(f"run failed: {summary.failure_reason}", file=sys.stderr)
        return 1
    return 0 if summary.success else 1


def _ablation_worker(args) -> tuple[dict, dict]:
    config_path, seed, aux_samples = args
    cfg = load_config(config_path)
    _, with_summary = _execute(cfg, seed)
    cfg2 = load_config(config_path)
    _, without_summary = _execute(cfg2, seed, aux_samples_override=0)
    return with_summary.to_dict(), without_summary.to_dict()


def cmd_ablation(
    config_path: str, n_seeds: int, out: str | None = None, jobs: int | None = None
) -> int:
    if n_seeds < 1:
        print("error: number of seeds must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(config_path)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    seeds = [cfg.sim.seed + i for i in range(n_seeds)]
    tasks = [(config_path, s, cfg.planner.aux_samples) for s in seeds]
    if jobs is None:
        jobs = min(n_seeds, os.cpu_count() or 1)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_ablation_worker, tasks))
    else:
        results = [_ablation_worker(t) for t in tasks]

    with_aux = [r[0] for r in results]
    without_aux = [r[1] for r in results]
    rate_with = sum(1 for s in with_aux if s["success"]) / n_seeds
    rate_without = sum(1 for s in without_aux if s["success"]) / n_seeds
    report = {
        "seeds": seeds,
        "with_aux": with_aux,
        "without_aux": without_aux,
        "success_rate_with": rate_with,
        "success_rate_without": rate_without,
    }
    out_dir = out or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "ablation.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"success rate with auxiliary prior: {rate_with:.2f}, without: {rate_without:.2f}"
    )
    return 0 if rate_with > rate_without else 1


def cmd_validate(config_path: str) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    doc = cfg.resolved_dict()
    derived = doc.pop("derived")
    print(f"switch_altitude = {derived['switch_altitude']:.6f}")
    print(f"threshold = {derived['threshold']:.6f}")
    print(f"inflation = {derived['inflation']:.6f}")
    print(f"alpha = {cfg.mode_params.alpha:.6f}")
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wheeldrone",
        description="Closed-loop navigation experiments for a two-wheeled ground/aerial drone",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one closed-loop run")
    p_run.add_argument("--config", required=True, help="path to run configuration JSON")
    p_run.add_argument("--seed", type=int, default=None, help="override the configured seed")
    p_run.add_argument("--out", default=None, help="output directory")

    p_abl = sub.add_parser("ablation", help="paired runs with/without the auxiliary prior")
    p_abl.add_argument("--config", required=True)
    p_abl.add_argument("--seeds", type=int, required=True, help="number of paired seeds")
    p_abl.add_argument("--out", default=None)
    p_abl.add_argument("--jobs", type=int, default=None, help="parallel workers (default: cpu count)")

    p_val = sub.add_parser("validate", help="resolve and print a configuration")
    p_val.add_argument("--config", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, seed=args.seed, out=args.out)
    if args.command == "ablation":
        return cmd_ablation(args.config, args.seeds, out=args.out, jobs=args.jobs)
    if args.command == "validate":
        return cmd_validate(args.config)
    return 2


if __name__ == "__main__":
    sys.exit(main())
