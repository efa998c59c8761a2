"""Batch runner: expands an experiment config into missions and aggregates them.

Every mission is an independent job keyed by (strategy, partition, seed),
so the worker pool can run them in any order; results are always
collected and written in job order, which keeps ``summary.csv`` identical
for any pool size.
"""
from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .baseline import random_plan, run_bst_fleet, run_bst_mission
from .config import ConfigError, Experiment
from .field import Sensor, reference_stats
from .metrics import METRIC_NAMES, write_aggregate_csv
from .multirobot import FleetConfig, run_fleet
from .planner import Pose
from .strategy import MissionConfig, adaptive_base, mission_streams, run_mission

logger = logging.getLogger(__name__)

THREADS_ENV = "HOTSPOT_IPP_THREADS"


@dataclass(frozen=True)
class Job:
    strategy: str
    partition: Optional[str]
    seed: int

    @property
    def group(self) -> str:
        return self.strategy if self.partition is None else f"{self.strategy}/{self.partition}"

    @property
    def stem(self) -> str:
        return f"{self.group.replace('/', '_')}_seed{self.seed}"


def plan_jobs(exp: Experiment) -> list[Job]:
    raw = exp.raw
    jobs = []
    for strategy in raw["strategies"]:
        if "fleet" in raw:
            modes = ["sweep"] if strategy == "BST" else raw["fleet"]["partition_modes"]
        else:
            modes = [None]
        for mode in modes:
            jobs.extend(Job(strategy, mode, s) for s in raw["seeds"])
    return jobs


def _pose(values, region) -> Pose:
    if len(values) == 3:
        return Pose(*map(float, values))
    return Pose.facing(float(values[0]), float(values[1]), region.center)


def _hyper_for(exp: Experiment, strategy: str, noise_std: float, region):
    if strategy in ("AdaptGP", "OptGP"):
        return adaptive_base(region, noise_std ** 2)
    if exp.raw.get("true_hyper") is None:
        if strategy == "BST":
            return adaptive_base(region, noise_std ** 2)
        raise ConfigError("TrueGP needs 'true_hyper'")
    return exp.true_hyper(noise_std)


def noise_std_for(exp: Experiment) -> float:
    field_ = exp.build_field()
    stats = reference_stats(field_, exp.raw["eval_resolution"])
    return exp.raw["noise_percent"] / 100.0 * stats.range


def run_job(exp: Experiment, job: Job, out_dir: Optional[Path]) -> dict:
    """Run one mission (or fleet trial) and return its result record."""
    raw = exp.raw
    field_ = exp.build_field()
    region = field_.region
    noise_std = noise_std_for(exp)
    hyper = _hyper_for(exp, job.strategy, noise_std, region)
    planner = exp.planner
    res = raw["eval_resolution"]
    record = {"group": job.group, "strategy": job.strategy, "partition": job.partition,
              "seed": job.seed}

    if "fleet" in raw:
        fl = raw["fleet"]
        if job.strategy == "BST":
            spacing = raw["bst"]["lane_spacing"]
            result = run_bst_fleet(field_, fl["k"], raw["budget"], hyper, noise_std, raw["eta"],
                                   spacing, planner.step_length, job.seed, res,
                                   fl["detection_radius"])
        else:
            cfg = FleetConfig(fl["k"], fl["epochs"], fl["steps_per_epoch"],
                              [_pose(p, region) for p in fl["start_poses"]], job.partition,
                              job.strategy, hyper, raw["budget"], raw["eta"], noise_std, planner,
                              job.seed, res, fl["detection_radius"], fl["stop_when_all_detected"])
            result = run_fleet(field_, cfg)
        if out_dir is not None:
            result.write(out_dir, job.stem)
        row = result.metrics.as_row()
        for j in range(1, len(field_.maxima) + 1):
            if j in result.detection_times:
                row[f"detect_{j}"] = result.detection_times[j]
        # censor undetected trials at the budget so every trial enters the mean
        row["detect_all_censored"] = result.detection_times.get(len(field_.maxima), raw["budget"])
        record.update(row=row, curve=[])
        return record

    if job.strategy == "BST":
        rng, sensor_seed = mission_streams(job.seed)
        spacing = raw["bst"]["lane_spacing"] or 2.0 * min(hyper.length_scales)
        plan = random_plan(region, spacing, rng)
        log = run_bst_mission(field_, Sensor(noise_std, sensor_seed), plan, raw["budget"],
                              raw["eta"], hyper, planner.step_length, job.seed, res)
    else:
        if "start_pose" not in raw:
            raise ConfigError("single-robot MCTS missions need 'start_pose'")
        rng, sensor_seed = mission_streams(job.seed)
        cfg = MissionConfig(raw["budget"], _pose(raw["start_pose"], region), job.strategy, hyper,
                            raw["eta"], planner, job.seed, res, raw["checkpoint_every"])
        log = run_mission(field_, Sensor(noise_std, sensor_seed), cfg, rng)
    if out_dir is not None:
        log.write_csv(out_dir / f"{job.stem}.csv")
        log.write_json(out_dir / f"{job.stem}.json")
    record.update(row=log.metrics.as_row(), curve=log.checkpoints,
                  gp_time=log.steps[-1].gp_time if log.steps else 0.0)
    return record


def _worker(args):
    exp, job, out_dir = args
    return run_job(exp, job, out_dir)


def thread_count() -> int:
    value = os.environ.get(THREADS_ENV)
    if value is None:
        return os.cpu_count() or 1
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {value!r}") from None
    return max(n, 1)


def run_experiment(exp: Experiment, out_dir, threads: Optional[int] = None) -> dict:
    """Run every job, write per-mission files plus summary.csv, curves.csv and summary.json."""
    out_dir = Path(out_dir)
    missions = out_dir / "missions"
    missions.mkdir(parents=True, exist_ok=True)
    exp.build_field()  # fail fast on a missing dataset
    jobs = plan_jobs(exp)
    threads = thread_count() if threads is None else threads
    args = [(exp, job, missions) for job in jobs]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            records = list(pool.map(_worker, args))
    else:
        records = [_worker(a) for a in args]

    groups: dict[str, list[dict]] = {}
    for rec in records:
        groups.setdefault(rec["group"], []).append(rec["row"])
    names = list(METRIC_NAMES)
    extra = sorted({k for rec in records for k in rec["row"]} - set(names))
    write_aggregate_csv(out_dir / "summary.csv", groups, names + extra)
    write_curves(out_dir / "curves.csv", records)
    summary = {
        "version": __version__,
        "config": exp.raw,
        "jobs": [{k: v for k, v in rec.items() if k != "curve"} for rec in records],
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    return summary


def write_curves(path, records) -> None:
    """Metric trajectories at every checkpoint (single-robot MCTS missions only)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["strategy", "seed", "budget", *METRIC_NAMES])
        for rec in records:
            for cp in rec["curve"]:
                w.writerow([rec["group"], rec["seed"], f"{cp['budget']:.6f}",
                            *(f"{cp[k]:.6f}" for k in METRIC_NAMES)])
