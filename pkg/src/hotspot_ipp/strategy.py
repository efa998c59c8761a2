"""Single-robot missions: TrueGP-, AdaptGP- and OptGP-MCTS.

The loop is predict -> plan -> move -> measure -> append, with the
strategy deciding how hyperparameters evolve between steps.  When the
budget runs out every strategy does one full hyperparameter fit and
reports the argmax of the posterior mean over the evaluation grid.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from . import metrics
from .field import Region, Sensor, SpatialField, measure, reference_stats
from .gp import GPModel, Hyperparameters, Stopwatch, optimize_hyperparameters
from .planner import PlannerConfig, PlannerStuckError, Pose, beta, plan_next

logger = logging.getLogger(__name__)

BUDGET_TOL = 1e-9
OPT_SEED = 12345


class StrategyKind(str, Enum):
    TRUE_GP = "TrueGP"
    ADAPT_GP = "AdaptGP"
    OPT_GP = "OptGP"
    BST = "BST"


class BudgetViolation(AssertionError):
    pass


def update_adaptive_hyper(base: Hyperparameters, t: int) -> Hyperparameters:
    """``sigma_t = sigma_0 log t``, ``l_t = l_0 / log t``; t < 2 is treated as 2."""
    if t < 1:
        raise ValueError("t must be >= 1")
    lg = math.log(max(t, 2))
    return Hyperparameters(base.signal_std * lg,
                           tuple(l / lg for l in base.length_scales),
                           base.noise_var)


def adaptive_base(region: Region, noise_var: float) -> Hyperparameters:
    d = region.diagonal()
    return Hyperparameters(1.0, (d, d), noise_var)


def refresh_hyper(gp: GPModel, kind: StrategyKind, base: Hyperparameters,
                  region: Region) -> None:
    """Set the hyperparameters used for the next prediction, given ``len(gp)`` samples."""
    n = len(gp)
    if kind is StrategyKind.ADAPT_GP:
        gp.hyper = base if n == 0 else update_adaptive_hyper(base, n)
    elif kind is StrategyKind.OPT_GP and n >= 2:
        gp.hyper = optimize_hyperparameters(gp, gp.hyper, fix_noise=True,
                                            diameter=region.diagonal(), seed=OPT_SEED)


def report_hotspot(gp: GPModel, grid: np.ndarray, region: Region,
                   optimize: bool = True) -> tuple[float, float]:
    """Full hyperparameter fit, then argmax of the posterior mean over ``grid``."""
    if optimize and len(gp) >= 2:
        gp.hyper = optimize_hyperparameters(gp, gp.hyper, fix_noise=True,
                                            diameter=region.diagonal(), seed=OPT_SEED)
    mean = gp.predict(grid, return_std=False)
    i = int(np.argmax(mean))
    return float(grid[i, 0]), float(grid[i, 1])


def mission_streams(seed: int, robot: int = 0) -> tuple[np.random.Generator, int]:
    """Planner RNG and sensor seed for one robot of one trial."""
    planner_ss, sensor_ss = np.random.SeedSequence([seed, robot]).spawn(2)
    return np.random.default_rng(planner_ss), int(sensor_ss.generate_state(1)[0])


@dataclass
class MissionConfig:
    budget: float
    start_pose: Pose
    strategy: StrategyKind
    initial_hyper: Hyperparameters
    eta: float = 0.0
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    seed: int = 0
    eval_resolution: int = 130
    checkpoint_every: Optional[float] = None

    def __post_init__(self):
        self.strategy = StrategyKind(self.strategy)
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")

    @property
    def step_cost(self) -> float:
        return self.planner.step_length + self.eta


@dataclass
class StepRecord:
    t: int
    time: float
    x: float
    y: float
    heading: float
    measurement: float
    signal_std: float
    l1: float
    l2: float
    noise_var: float
    beta: float
    gp_time: float
    robot: int = 0
    in_cell: bool = True


STEP_FIELDS = list(StepRecord.__dataclass_fields__)


@dataclass
class MissionLog:
    strategy: str
    seed: int
    budget: float
    eta: float
    start: Pose
    steps: list[StepRecord] = field(default_factory=list)
    report: Optional[tuple[float, float]] = None
    final_hyper: Optional[Hyperparameters] = None
    truncated: bool = False
    checkpoints: list[dict] = field(default_factory=list)
    metrics: Optional[metrics.MetricsReport] = None
    tour_length: Optional[float] = None  # set when the tour is not the chord polyline

    @property
    def locations(self) -> np.ndarray:
        return np.array([[s.x, s.y] for s in self.steps]).reshape(-1, 2)

    @property
    def travel_length(self) -> float:
        if self.tour_length is not None:
            return self.tour_length
        pts = np.vstack([[self.start.x, self.start.y], self.locations])
        return float(np.sum(np.hypot(*np.diff(pts, axis=0).T)))

    @property
    def gp_time_series(self) -> list[float]:
        return [s.gp_time for s in self.steps]

    def check_budget(self) -> None:
        used = self.travel_length + len(self.steps) * self.eta
        if used > self.budget + BUDGET_TOL:
            raise BudgetViolation(f"budget exceeded: {used} > {self.budget}")

    def trajectory(self) -> list[tuple[float, float, float]]:
        """(time, x, y) samples including the start pose at time 0."""
        return [(0.0, self.start.x, self.start.y)] + [(s.time, s.x, s.y) for s in self.steps]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=STEP_FIELDS)
            w.writeheader()
            for s in self.steps:
                w.writerow(asdict(s))

    def summary(self) -> dict:
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "budget": self.budget,
            "eta": self.eta,
            "start": [self.start.x, self.start.y, self.start.heading],
            "steps": len(self.steps),
            "travel_length": self.travel_length,
            "report": list(self.report) if self.report else None,
            "final_hyper": self.final_hyper.to_dict() if self.final_hyper else None,
            "truncated": self.truncated,
            "metrics": self.metrics.to_dict() if self.metrics else None,
            "gp_time_total": self.steps[-1].gp_time if self.steps else 0.0,
            "checkpoints": self.checkpoints,
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2), encoding="utf-8")


def checkpoint_metrics(field_: SpatialField, gp: GPModel, locations, grid, stats,
                       budget_used: float) -> dict:
    """Metrics of the robot's current belief, with the hyperparameters in use now.

    Evaluated on a private copy so the mission's GP timing is untouched.
    """
    probe = gp.copy(clock=Stopwatch())
    x_hat = report_hotspot(probe, grid, field_.region, optimize=False)
    rep = metrics.evaluate(field_, stats, probe, x_hat, locations, grid)
    return {"budget": budget_used, **rep.as_row()}


def run_mission(field_: SpatialField, sensor: Sensor, config: MissionConfig,
                planner_rng: Optional[np.random.Generator] = None) -> MissionLog:
    region = field_.region
    if not region.contains((config.start_pose.x, config.start_pose.y)):
        raise ValueError("start pose outside region")
    if planner_rng is None:
        planner_rng = mission_streams(config.seed)[0]
    kind = config.strategy
    gp = GPModel(config.initial_hyper)
    base = config.initial_hyper
    grid = region.grid(config.eval_resolution)
    stats = reference_stats(field_, config.eval_resolution)
    log = MissionLog(kind.value, config.seed, config.budget, config.eta, config.start_pose)

    pose = config.start_pose
    used = 0.0
    next_checkpoint = config.checkpoint_every
    refresh_hyper(gp, kind, base, region)
    while used + config.step_cost <= config.budget + BUDGET_TOL:
        t = len(gp) + 1
        try:
            nxt = plan_next(gp, pose, config.budget - used, t, config.planner, planner_rng,
                            region, step_cost=config.step_cost)
        except PlannerStuckError:
            logger.warning("planner stuck at %s; ending mission early", pose)
            log.truncated = True
            break
        used += pose.distance_to(nxt) + config.eta
        pose = nxt
        y = measure(field_, sensor, pose.position)
        h = gp.hyper
        gp.add(pose.position, y)
        refresh_hyper(gp, kind, base, region)
        log.steps.append(StepRecord(t, used, pose.x, pose.y, pose.heading, y, h.signal_std,
                                    h.length_scales[0], h.length_scales[1], h.noise_var,
                                    beta(t, config.planner), gp.clock.total))
        if next_checkpoint is not None and used + BUDGET_TOL >= next_checkpoint:
            log.checkpoints.append(checkpoint_metrics(field_, gp, log.locations, grid, stats, used))
            next_checkpoint += config.checkpoint_every

    log.check_budget()
    finish(log, field_, gp, grid, stats)
    return log


def finish(log: MissionLog, field_: SpatialField, gp: GPModel, grid, stats) -> None:
    """Final hyperparameter fit, hotspot report and metrics."""
    log.report = report_hotspot(gp, grid, field_.region)
    log.final_hyper = gp.hyper
    locs = log.locations if len(log.steps) else np.array([[log.start.x, log.start.y]])
    log.metrics = metrics.evaluate(field_, stats, gp, log.report, locs, grid)
    log.metrics.gp_time_series = log.gp_time_series
