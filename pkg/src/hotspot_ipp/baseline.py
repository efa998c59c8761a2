"""Boustrophedon (lawnmower) coverage baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .field import Region, Sensor, SpatialField, measure, reference_stats
from .gp import GPModel, Hyperparameters
from .planner import Pose
from . import metrics
from .strategy import MissionLog, StepRecord, finish, mission_streams, report_hotspot

CORNERS = ("sw", "se", "nw", "ne")
ORIENTATIONS = ("horizontal", "vertical")


@dataclass(frozen=True)
class BoustrophedonPlan:
    sub_region: Region
    lane_spacing: float
    orientation: str = "horizontal"
    start_corner: str = "sw"

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}")
        if self.start_corner not in CORNERS:
            raise ValueError(f"start_corner must be one of {CORNERS}")
        r = self.sub_region
        if not 0 < self.lane_spacing <= min(r.width, r.height) + 1e-12:
            raise ValueError("lane spacing must be positive and fit inside the sub-region")


def bst_waypoints(plan: BoustrophedonPlan) -> np.ndarray:
    """Lane end points of an alternating sweep, as an (2 * lanes, 2) array.

    Lanes start on the region edge at the start corner and are spaced
    ``lane_spacing`` apart across the sweep direction.
    """
    r = plan.sub_region
    horizontal = plan.orientation == "horizontal"
    along = (r.x_min, r.x_max) if horizontal else (r.y_min, r.y_max)
    across = (r.y_min, r.y_max) if horizontal else (r.x_min, r.x_max)
    n_lanes = int(math.floor((across[1] - across[0]) / plan.lane_spacing + 1e-9)) + 1
    offsets = across[0] + plan.lane_spacing * np.arange(n_lanes)
    south, west = plan.start_corner[0] == "s", plan.start_corner[1] == "w"
    from_low_across = south if horizontal else west
    from_low_along = west if horizontal else south
    if not from_low_across:
        offsets = across[0] + across[1] - offsets
    pts = []
    for i, c in enumerate(offsets):
        a0, a1 = along if (i % 2 == 0) == from_low_along else along[::-1]
        pts += [(a0, c), (a1, c)]
    pts = np.array(pts, float)
    return pts if horizontal else pts[:, ::-1]


def polyline_length(points) -> float:
    p = np.asarray(points, float)
    return float(np.sum(np.hypot(*np.diff(p, axis=0).T))) if len(p) > 1 else 0.0


def sample_along(waypoints: np.ndarray, spacing: float, count: int) -> np.ndarray:
    """``count`` points at arc lengths spacing, 2*spacing, ... along a ping-pong
    traversal of ``waypoints`` (the path is retraced backwards when it ends)."""
    seg = np.diff(waypoints, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    total = float(seg_len.sum())
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    out = np.empty((count, 2))
    for k in range(count):
        s = (k + 1) * spacing
        lap, rem = divmod(s, total)
        if int(lap) % 2 == 1:
            rem = total - rem
        out[k, 0] = np.interp(rem, cum, waypoints[:, 0])
        out[k, 1] = np.interp(rem, cum, waypoints[:, 1])
    return out


def random_plan(region: Region, lane_spacing: float, rng: np.random.Generator) -> BoustrophedonPlan:
    return BoustrophedonPlan(region, min(lane_spacing, region.width, region.height),
                             ORIENTATIONS[int(rng.integers(2))], CORNERS[int(rng.integers(4))])


def strips(region: Region, k: int) -> list[Region]:
    """Split a region into k equal vertical strips, west to east."""
    xs = np.linspace(region.x_min, region.x_max, k + 1)
    return [Region(xs[i], xs[i + 1], region.y_min, region.y_max) for i in range(k)]


def _sweep(field_, sensor, plan, budget, eta, hyper, step_length, seed, robot=0):
    wp = bst_waypoints(plan)
    count = int(math.floor(budget / (step_length + eta) + 1e-9))
    pts = sample_along(wp, step_length, count)
    start = Pose(float(wp[0, 0]), float(wp[0, 1]), 0.0)
    log = MissionLog("BST", seed, budget, eta, start)
    gp = GPModel(hyper)
    used = 0.0
    prev = wp[0]
    for t, p in enumerate(pts, start=1):
        used += step_length + eta
        heading = math.atan2(p[1] - prev[1], p[0] - prev[0])
        y = measure(field_, sensor, p)
        gp.add(p, y)
        log.steps.append(StepRecord(t, used, float(p[0]), float(p[1]), heading, y,
                                    hyper.signal_std, hyper.length_scales[0],
                                    hyper.length_scales[1], hyper.noise_var, 0.0,
                                    gp.clock.total, robot=robot))
        prev = p
    # the tour follows the lanes, so its length is the arc length, not the chords
    log.tour_length = count * step_length
    log.check_budget()
    return log, gp


def run_bst_mission(field_: SpatialField, sensor: Sensor, plan: BoustrophedonPlan,
                    budget: float, eta: float = 0.0, hyper: Optional[Hyperparameters] = None,
                    step_length: float = 1.0, seed: int = 0,
                    eval_resolution: int = 130) -> MissionLog:
    """Follow the sweep at unit speed, measuring every ``step_length`` of travel.

    When the sweep ends before the budget does, the robot retraces it.
    The hotspot report uses the same final pipeline as the MCTS strategies.
    """
    if hyper is None:
        raise ValueError("the final GP report needs initial hyperparameters")
    log, gp = _sweep(field_, sensor, plan, budget, eta, hyper, step_length, seed)
    grid = field_.region.grid(eval_resolution)
    finish(log, field_, gp, grid, reference_stats(field_, eval_resolution))
    return log


def run_bst_fleet(field_: SpatialField, k: int, budget: float, hyper: Hyperparameters,
                  noise_std: float = 0.0, eta: float = 0.0, lane_spacing: Optional[float] = None,
                  step_length: float = 1.0, seed: int = 0, eval_resolution: int = 130,
                  detection_radius: float = 2.0):
    """k robots, each sweeping its own vertical strip with a random orientation and corner."""
    from .multirobot import FleetResult

    region = field_.region
    spacing = lane_spacing if lane_spacing is not None else 2.0 * min(hyper.length_scales)
    logs, X, Y = [], [], []
    for i, sub in enumerate(strips(region, k)):
        rng, sensor_seed = mission_streams(seed, i)
        plan = random_plan(sub, spacing, rng)
        log, gp = _sweep(field_, Sensor(noise_std, sensor_seed), plan, budget, eta, hyper,
                         step_length, seed, robot=i)
        logs.append(log)
        X.append(gp.X)
        Y.append(gp.y)
    # pool in time order, robot index breaking ties
    order = np.lexsort((np.concatenate([[i] * len(y) for i, y in enumerate(Y)]),
                        np.concatenate([[s.time for s in log.steps] for log in logs])))
    combined = GPModel(hyper, np.vstack(X)[order], np.concatenate(Y)[order])
    grid = region.grid(eval_resolution)
    stats = reference_stats(field_, eval_resolution)
    x_hat = report_hotspot(combined, grid, region)
    rep = metrics.evaluate(field_, stats, combined, x_hat, combined.X, grid)
    det = metrics.detection_times([log.trajectory() for log in logs], field_.maxima,
                                  detection_radius)
    rep.detection_times = det
    for log in logs:
        log.report, log.final_hyper = x_hat, combined.hyper
    return FleetResult(logs, combined, x_hat, rep, det)
