"""Decentralised multi-robot hotspot search with epoch-wise Voronoi partitions.

At the start of every epoch the pooled GP is copied once per robot and
the evaluation grid is split among robots by nearest current position.
For ``m`` steps each robot plans inside its own cell using only its own
replica; at the epoch boundary all samples are pooled again.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels, metrics
from .field import Sensor, SpatialField, measure, reference_stats
from .gp import GPModel, Hyperparameters, Stopwatch, optimize_hyperparameters
from .planner import Cell, PlannerConfig, PlannerStuckError, Pose, beta, plan_next
from .strategy import (BUDGET_TOL, OPT_SEED, MissionLog, StepRecord, StrategyKind,
                       mission_streams, refresh_hyper, report_hotspot)

logger = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-12


class PartitionMode(str, Enum):
    NONE = "none"
    VORONOI = "voronoi"


@dataclass
class VoronoiPartition:
    generators: np.ndarray
    assignment: np.ndarray

    def cell(self, i: int, grid: np.ndarray) -> np.ndarray:
        return grid[self.assignment == i]

    def counts(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=len(self.generators))


def compute_partition(generators, grid) -> VoronoiPartition:
    """Assign each grid point to its nearest generator (lowest index on ties)."""
    gens = np.atleast_2d(np.asarray(generators, float))
    if not len(gens):
        raise ValueError("need at least one generator")
    uniq = np.unique(gens, axis=0)
    if len(uniq) < len(gens):
        logger.warning("duplicate Voronoi generators; later duplicates get only tied points")
    return VoronoiPartition(gens, kernels.nearest_generator(np.asarray(grid, float), gens))


def weighted_centroid_from_weights(points, weights) -> tuple[float, float]:
    p = np.atleast_2d(np.asarray(points, float))
    w = np.maximum(np.asarray(weights, float), WEIGHT_FLOOR)
    c = (p * w[:, None]).sum(axis=0) / w.sum()
    return float(c[0]), float(c[1])


def weighted_centroid(cell, gp: GPModel, t: int, config: PlannerConfig) -> tuple[float, float]:
    """Centroid of ``cell`` weighted by ``mu + sqrt(beta_t) * sigma``."""
    cell = np.atleast_2d(np.asarray(cell, float))
    if not len(cell):
        raise ValueError("empty cell")
    mean, std = gp.predict(cell)
    return weighted_centroid_from_weights(cell, mean + math.sqrt(beta(t, config)) * std)


@dataclass
class FleetConfig:
    k: int
    epochs: int
    steps_per_epoch: int
    start_poses: list[Pose]
    partition_mode: PartitionMode = PartitionMode.VORONOI
    strategy: StrategyKind = StrategyKind.TRUE_GP
    initial_hyper: Optional[Hyperparameters] = None
    budget: Optional[float] = None
    eta: float = 0.0
    noise_std: float = 0.0
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    seed: int = 0
    eval_resolution: int = 130
    detection_radius: float = 2.0
    stop_when_all_detected: bool = False
    centroids: bool = True

    def __post_init__(self):
        self.partition_mode = PartitionMode(self.partition_mode)
        self.strategy = StrategyKind(self.strategy)
        if self.strategy is StrategyKind.BST:
            raise ValueError("use baseline.run_bst_fleet for boustrophedon fleets")
        if self.k < 1 or len(self.start_poses) != self.k:
            raise ValueError("need k >= 1 and exactly k start poses")
        if self.initial_hyper is None:
            raise ValueError("initial_hyper is required")
        step_cost = self.planner.step_length + self.eta
        if self.budget is None:
            self.budget = self.epochs * self.steps_per_epoch * step_cost
        if self.epochs * self.steps_per_epoch * step_cost > self.budget + BUDGET_TOL:
            logger.info("epochs * steps exceed the budget; robots stop when it runs out")


@dataclass
class FleetResult:
    logs: list[MissionLog]
    combined: GPModel
    report: tuple[float, float]
    metrics: metrics.MetricsReport
    detection_times: dict[int, float]
    epochs: list[dict] = field(default_factory=list)
    sample_owner: list[int] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "report": list(self.report),
            "metrics": self.metrics.to_dict(),
            "detection_times": {str(k): v for k, v in self.detection_times.items()},
            "combined_samples": len(self.combined),
            "final_hyper": self.combined.hyper.to_dict(),
            "epochs": self.epochs,
            "robots": [log.summary() for log in self.logs],
        }

    def write(self, directory, stem: str) -> None:
        directory = Path(directory)
        for i, log in enumerate(self.logs):
            log.write_csv(directory / f"{stem}_robot{i}.csv")
        (directory / f"{stem}_fleet.json").write_text(json.dumps(self.summary(), indent=2),
                                                      encoding="utf-8")


class _Detector:
    def __init__(self, maxima, radius):
        self.maxima = np.asarray(maxima, float)
        self.radius = radius
        self.found = np.zeros(len(self.maxima), bool)

    def visit(self, x, y):
        d = np.hypot(self.maxima[:, 0] - x, self.maxima[:, 1] - y)
        self.found |= d <= self.radius

    @property
    def all_found(self) -> bool:
        return bool(self.found.all())


def run_fleet(field_: SpatialField, config: FleetConfig) -> FleetResult:
    region = field_.region
    for p in config.start_poses:
        if not region.contains((p.x, p.y)):
            raise ValueError(f"start pose {p} outside region")
    k = config.k
    grid = region.grid(config.eval_resolution)
    stats = reference_stats(field_, config.eval_resolution)
    base = config.initial_hyper
    kind = config.strategy
    step_cost = config.planner.step_length + config.eta

    streams = [mission_streams(config.seed, i) for i in range(k)]
    rngs = [s[0] for s in streams]
    sensors = [Sensor(config.noise_std, s[1]) for s in streams]
    clocks = [Stopwatch() for _ in range(k)]
    poses = list(config.start_poses)
    used = [0.0] * k
    active = [True] * k
    logs = [MissionLog(kind.value, config.seed, config.budget, config.eta, p) for p in poses]
    detector = _Detector(field_.maxima, config.detection_radius)
    for p in poses:
        detector.visit(p.x, p.y)

    combined = GPModel(base, clock=Stopwatch())
    refresh_hyper(combined, kind, base, region)
    pool_X: list[np.ndarray] = []
    pool_y: list[float] = []
    owner: list[int] = []
    epoch_info = []
    stop = False

    for epoch in range(config.epochs):
        if stop or not any(active):
            break
        replicas = []
        for i in range(k):
            r = combined.copy(clock=clocks[i])
            refresh_hyper_replica(r, combined, kind, base)
            replicas.append(r)
        gens = np.array([[p.x, p.y] for p in poses])
        info = {"epoch": epoch, "generators": gens.tolist()}
        cells: list[Optional[Cell]] = [None] * k
        if config.partition_mode is PartitionMode.VORONOI and k > 1:
            part = compute_partition(gens, grid)
            counts = part.counts()
            info["cell_sizes"] = counts.tolist()
            for i in range(k):
                if counts[i] == 0:
                    logger.warning("robot %d has an empty cell in epoch %d; planning unconstrained", i, epoch)
                else:
                    cells[i] = Cell(gens, i)
            if config.centroids:
                info["centroids"] = _centroids(combined, part, grid, config.planner)
        epoch_info.append(info)

        for _ in range(config.steps_per_epoch):
            for i in range(k):
                if not active[i]:
                    continue
                if used[i] + step_cost > config.budget + BUDGET_TOL:
                    active[i] = False
                    continue
                gp = replicas[i]
                t = len(gp) + 1
                remaining = config.budget - used[i]
                in_cell = True
                try:
                    nxt = plan_next(gp, poses[i], remaining, t, config.planner, rngs[i],
                                    region, cells[i], step_cost)
                except PlannerStuckError:
                    if cells[i] is None:
                        logger.warning("robot %d stuck at %s; it stops", i, poses[i])
                        logs[i].truncated = True
                        active[i] = False
                        continue
                    logger.warning("robot %d boxed in by its cell; planning unconstrained", i)
                    in_cell = False
                    try:
                        nxt = plan_next(gp, poses[i], remaining, t, config.planner, rngs[i],
                                        region, None, step_cost)
                    except PlannerStuckError:
                        logs[i].truncated = True
                        active[i] = False
                        continue
                if cells[i] is None and config.partition_mode is PartitionMode.VORONOI and k > 1:
                    in_cell = False
                used[i] += poses[i].distance_to(nxt) + config.eta
                poses[i] = nxt
                y = measure(field_, sensors[i], nxt.position)
                h = gp.hyper
                gp.add(nxt.position, y)
                refresh_hyper(gp, kind, base, region)
                pool_X.append(nxt.position)
                pool_y.append(y)
                owner.append(i)
                detector.visit(nxt.x, nxt.y)
                logs[i].steps.append(StepRecord(
                    t, used[i], nxt.x, nxt.y, nxt.heading, y, h.signal_std,
                    h.length_scales[0], h.length_scales[1], h.noise_var,
                    beta(t, config.planner), clocks[i].total, robot=i, in_cell=in_cell))
            if config.stop_when_all_detected and detector.all_found:
                stop = True
                break

        if k == 1:
            combined = replicas[0]  # already holds every sample, with up-to-date hyperparameters
        else:
            combined = _pool(combined, pool_X, pool_y, kind, base, region)

    for log in logs:
        log.check_budget()
    x_hat = report_hotspot(combined, grid, region)
    locs = np.array(pool_X) if pool_X else np.array([[p.x, p.y] for p in config.start_poses])
    rep = metrics.evaluate(field_, stats, combined, x_hat, locs, grid)
    det = metrics.detection_times([log.trajectory() for log in logs], field_.maxima,
                                  config.detection_radius)
    rep.detection_times = det
    for log in logs:
        log.report = x_hat
        log.final_hyper = combined.hyper
    return FleetResult(logs, combined, x_hat, rep, det, epoch_info, owner)


def refresh_hyper_replica(replica: GPModel, combined: GPModel, kind: StrategyKind,
                          base: Hyperparameters) -> None:
    if kind is StrategyKind.ADAPT_GP:
        replica.hyper = combined.hyper  # already scheduled on the pooled count


def _pool(prev: GPModel, X, y, kind, base, region) -> GPModel:
    """Rebuild the combined model from every sample collected so far."""
    gp = GPModel(prev.hyper, np.array(X).reshape(-1, 2), np.array(y), clock=prev.clock)
    if kind is StrategyKind.ADAPT_GP:
        refresh_hyper(gp, kind, base, region)
    elif kind is StrategyKind.OPT_GP and len(gp) >= 2:
        gp.hyper = optimize_hyperparameters(gp, prev.hyper, fix_noise=True,
                                            diameter=region.diagonal(), seed=OPT_SEED)
    return gp


def _centroids(gp: GPModel, part: VoronoiPartition, grid, config: PlannerConfig) -> list:
    mean, std = gp.predict(grid)
    w = mean + math.sqrt(beta(len(gp) + 1, config)) * std
    out = []
    for i in range(len(part.generators)):
        mask = part.assignment == i
        out.append(list(weighted_centroid_from_weights(grid[mask], w[mask])) if mask.any() else None)
    return out
