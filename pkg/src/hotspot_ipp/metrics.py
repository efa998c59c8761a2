"""Evaluation metrics, all expressed in percent.

Regret and RMSE are normalised by the field's range, distance by the
region diagonal.  ``f(x*)`` and the range come from :func:`reference_stats`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .field import FieldStats, Region, SpatialField

METRIC_NAMES = ("terminal_regret", "avg_cumulative_regret", "rmse", "distance")


def terminal_regret(field_: SpatialField, x_hat, stats: FieldStats) -> float:
    return 100.0 * (stats.max_value - field_(np.asarray(x_hat, float))) / stats.range


def avg_cumulative_regret(field_: SpatialField, locations, stats: FieldStats) -> float:
    pts = np.atleast_2d(np.asarray(locations, float))
    if not len(pts):
        raise ValueError("cumulative regret needs a nonempty trajectory")
    return 100.0 * float(np.mean(stats.max_value - field_(pts))) / stats.range


def rmse(field_: SpatialField, gp, grid, stats: FieldStats) -> float:
    grid = np.asarray(grid, float)
    err = gp.predict(grid, return_std=False) - field_(grid)
    return 100.0 * math.sqrt(float(np.mean(err ** 2))) / stats.range


def distance_error(x_hat, x_star, region: Region) -> float:
    d = math.hypot(x_hat[0] - x_star[0], x_hat[1] - x_star[1])
    return 100.0 * d / region.diagonal()


def detection_times(trajectories: Sequence, maxima: Sequence, radius: float = 2.0) -> dict[int, float]:
    """Earliest time by which ``j`` distinct maxima have been visited, for each j.

    ``trajectories`` holds one sequence of ``(time, x, y)`` per robot.  A
    maximum counts as detected at the first time any robot is within
    ``radius`` of it.  Counts never reached are absent from the result.
    """
    if not len(maxima):
        raise ValueError("need at least one maximum")
    m = np.asarray(maxima, float)
    first = np.full(len(m), np.inf)
    for traj in trajectories:
        arr = np.asarray(traj, float).reshape(-1, 3)
        if not len(arr):
            continue
        d = np.hypot(arr[:, None, 1] - m[None, :, 0], arr[:, None, 2] - m[None, :, 1])
        hit = d <= radius
        times = np.where(hit, arr[:, 0:1], np.inf).min(axis=0)
        first = np.minimum(first, times)
    found = np.sort(first[np.isfinite(first)])
    return {j + 1: float(t) for j, t in enumerate(found)}


@dataclass
class MetricsReport:
    terminal_regret: float
    avg_cumulative_regret: float
    rmse: float
    distance: float
    detection_times: dict[int, float] = field(default_factory=dict)
    gp_time_series: list[float] = field(default_factory=list)

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in METRIC_NAMES}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["detection_times"] = {str(k): v for k, v in self.detection_times.items()}
        return d


def evaluate(field_: SpatialField, stats: FieldStats, gp, x_hat, locations, grid,
             x_star=None, region: Optional[Region] = None) -> MetricsReport:
    region = region or field_.region
    x_star = stats.max_location if x_star is None else x_star
    return MetricsReport(
        terminal_regret=terminal_regret(field_, x_hat, stats),
        avg_cumulative_regret=avg_cumulative_regret(field_, locations, stats),
        rmse=rmse(field_, gp, grid, stats),
        distance=distance_error(x_hat, x_star, region),
    )


def mean_std(values: Iterable[float]) -> tuple[float, float]:
    arr = np.asarray(list(values), float)
    if not len(arr):
        return math.nan, math.nan
    return float(arr.mean()), float(arr.std())


def aggregate(rows: Sequence[Mapping[str, float]], names: Sequence[str] = METRIC_NAMES) -> dict[str, tuple[float, float]]:
    return {k: mean_std(r[k] for r in rows if k in r) for k in names}


def write_aggregate_csv(path, groups: Mapping[str, Sequence[Mapping[str, float]]],
                        names: Sequence[str] = METRIC_NAMES) -> None:
    """One row per (group, metric) with mean, std and sample count."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["strategy", "metric", "mean", "std", "n"])
        for group, rows in groups.items():
            for k in names:
                vals = [r[k] for r in rows if k in r]
                mu, sd = mean_std(vals)
                w.writerow([group, k, f"{mu:.6f}", f"{sd:.6f}", len(vals)])
