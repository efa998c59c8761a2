"""Ground-truth spatial fields, the simulated sensor and dataset ingestion.

Two kinds of field are provided: an analytic multi-modal field built from
Gaussian bumps, and a gridded field (for example a chlorophyll raster)
queried through a Gaussian radial-basis interpolant.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.interpolate import RBFInterpolator
from scipy.optimize import minimize

logger = logging.getLogger(__name__)


class FieldFormatError(ValueError):
    """A gridded-field file could not be parsed or is structurally incomplete."""


class OutOfBoundsError(ValueError):
    """A query point lies outside the field's region."""


@dataclass(frozen=True)
class Region:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate region {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    @property
    def bounds(self) -> np.ndarray:
        return np.array([self.x_min, self.x_max, self.y_min, self.y_max])

    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    def contains(self, point, tol: float = 1e-9) -> bool:
        x, y = float(point[0]), float(point[1])
        return (self.x_min - tol <= x <= self.x_max + tol
                and self.y_min - tol <= y <= self.y_max + tol)

    def grid(self, resolution: int) -> np.ndarray:
        """Regular ``resolution x resolution`` grid, shape (resolution**2, 2).

        Points are in row-major order: rows run along y, and within a row x
        increases fastest.
        """
        if resolution < 2:
            raise ValueError("grid resolution must be >= 2")
        xs = np.linspace(self.x_min, self.x_max, resolution)
        ys = np.linspace(self.y_min, self.y_max, resolution)
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max,
                "y_min": self.y_min, "y_max": self.y_max}

    @classmethod
    def from_dict(cls, d: dict) -> "Region":
        return cls(float(d["x_min"]), float(d["x_max"]), float(d["y_min"]), float(d["y_max"]))


PACIFIC_REGION = Region(-155.5, -129.5, 9.0, 35.0)


@dataclass(frozen=True)
class Bump:
    center: tuple[float, float]
    height: float
    width: float


def _as_points(points) -> tuple[np.ndarray, bool]:
    arr = np.asarray(points, dtype=float)
    single = arr.ndim == 1
    return np.atleast_2d(arr), single


class SpatialField:
    """Common query surface; subclasses implement ``_evaluate`` on (m, 2) arrays."""

    region: Region

    def __call__(self, points):
        pts, single = _as_points(points)
        vals = self._evaluate(pts)
        return float(vals[0]) if single else vals

    value = __call__

    def _evaluate(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def maxima(self) -> list[tuple[float, float]]:
        """Known hotspot locations, global maximum first."""
        return []


@dataclass(frozen=True)
class SyntheticField(SpatialField):
    """Multi-modal field ``1 - prod_i (1 - h_i * g_i(x))`` over Gaussian bumps ``g_i``.

    The noisy-OR combination is smooth, never exceeds 1, and equals 1
    exactly at the center of the unit-height bump, so the global maximum
    is known analytically.  Lower bumps keep a local maximum close to
    their center; :attr:`maxima` refines those numerically.
    """

    bumps: tuple[Bump, ...]
    region: Region = PACIFIC_REGION

    def __post_init__(self):
        if not self.bumps:
            raise ValueError("a synthetic field needs at least one bump")
        n_global = sum(1 for b in self.bumps if b.height == 1.0)
        if n_global != 1 or any(not 0 < b.height <= 1.0 for b in self.bumps):
            raise ValueError("exactly one bump must have height 1.0 and the rest lie in (0, 1)")
        if any(b.width <= 0 for b in self.bumps):
            raise ValueError("bump widths must be positive")

    def _evaluate(self, pts: np.ndarray) -> np.ndarray:
        miss = np.ones(len(pts))
        for b in self.bumps:
            d2 = (pts[:, 0] - b.center[0]) ** 2 + (pts[:, 1] - b.center[1]) ** 2
            miss *= 1.0 - b.height * np.exp(-d2 / (2.0 * b.width ** 2))
        return np.clip(1.0 - miss, 0.0, 1.0)

    @property
    def global_max(self) -> tuple[float, float]:
        return next(b.center for b in self.bumps if b.height == 1.0)

    @cached_property
    def maxima(self) -> list[tuple[float, float]]:
        out = []
        for b in sorted(self.bumps, key=lambda b: -b.height):
            if b.height == 1.0:
                out.append(b.center)
                continue
            res = minimize(lambda p: -self(p), np.asarray(b.center, float), method="Nelder-Mead",
                           options={"xatol": 1e-8, "fatol": 1e-12})
            out.append((float(res.x[0]), float(res.x[1])))
        return out

    def to_dict(self) -> dict:
        return {
            "region": self.region.to_dict(),
            "bumps": [{"center": list(b.center), "height": b.height, "width": b.width}
                      for b in self.bumps],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticField":
        bumps = tuple(Bump((float(b["center"][0]), float(b["center"][1])),
                           float(b["height"]), float(b["width"])) for b in d["bumps"])
        region = Region.from_dict(d["region"]) if "region" in d else PACIFIC_REGION
        return cls(bumps, region)


FOUR_MAXIMA_BUMPS = (
    Bump((-135.6, 29.0), 1.0, 4.5),
    Bump((-148.0, 15.0), 0.8, 4.0),
    Bump((-140.0, 22.0), 0.7, 4.0),
    Bump((-133.0, 13.0), 0.75, 4.0),
)


def make_four_maxima_field() -> SyntheticField:
    """The four-hotspot benchmark field: one global maximum near the top
    right, a decoy next to the lower-left start corner and two others."""
    return SyntheticField(FOUR_MAXIMA_BUMPS, PACIFIC_REGION)


class GriddedField(SpatialField):
    """Raster field interpolated with Gaussian radial basis functions.

    The basis width equals the grid spacing, so the interpolant passes
    through every node and stays local.
    """

    def __init__(self, grid: np.ndarray, lon_axis: Sequence[float], lat_axis: Sequence[float]):
        grid = np.asarray(grid, dtype=float)
        lon = np.asarray(lon_axis, dtype=float)
        lat = np.asarray(lat_axis, dtype=float)
        if lon.ndim != 1 or lat.ndim != 1 or len(lon) < 2 or len(lat) < 2:
            raise FieldFormatError("axes must be 1-D with at least two nodes each")
        if np.any(np.diff(lon) <= 0) or np.any(np.diff(lat) <= 0):
            raise FieldFormatError("axes must be strictly increasing")
        if grid.shape != (len(lat), len(lon)):
            raise FieldFormatError(
                f"grid shape {grid.shape} does not match axes ({len(lat)}, {len(lon)})")
        self.grid = grid
        self.lon_axis = lon
        self.lat_axis = lat
        self.region = Region(lon[0], lon[-1], lat[0], lat[-1])
        spacing = float(min(np.min(np.diff(lon)), np.min(np.diff(lat))))
        self.spacing = spacing
        gx, gy = np.meshgrid(lon, lat)
        nodes = np.column_stack([gx.ravel(), gy.ravel()])
        self._interp = RBFInterpolator(nodes, grid.ravel(), kernel="gaussian",
                                       epsilon=1.0 / spacing)

    def _evaluate(self, pts: np.ndarray) -> np.ndarray:
        return self._interp(pts)

    @property
    def maxima(self) -> list[tuple[float, float]]:
        iy, ix = np.unravel_index(int(np.argmax(self.grid)), self.grid.shape)
        return [(float(self.lon_axis[ix]), float(self.lat_axis[iy]))]


def load_gridded_field(path) -> GriddedField:
    """Read a ``lon,lat,value`` CSV covering a complete rectangular grid."""
    path = Path(path)
    rows: dict[tuple[float, float], float] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["lon", "lat", "value"]:
            raise FieldFormatError(f"{path}: row 1: expected header 'lon,lat,value', got {header}")
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise FieldFormatError(f"{path}: row {rowno}: expected 3 columns, got {len(row)}")
            try:
                lon, lat, val = (float(c) for c in row)
            except ValueError as exc:
                raise FieldFormatError(f"{path}: row {rowno}: {exc}") from None
            if not all(math.isfinite(v) for v in (lon, lat, val)):
                raise FieldFormatError(f"{path}: row {rowno}: non-finite value")
            rows[(lon, lat)] = val
    if not rows:
        raise FieldFormatError(f"{path}: no data rows")
    lons = np.array(sorted({k[0] for k in rows}))
    lats = np.array(sorted({k[1] for k in rows}))
    missing = [(lo, la) for la in lats for lo in lons if (lo, la) not in rows]
    if missing:
        preview = ", ".join(f"({lo:g}, {la:g})" for lo, la in missing[:20])
        more = f" and {len(missing) - 20} more" if len(missing) > 20 else ""
        raise FieldFormatError(f"{path}: incomplete grid, missing nodes {preview}{more}")
    grid = np.array([[rows[(lo, la)] for lo in lons] for la in lats])
    return GriddedField(grid, lons, lats)


def write_gridded_csv(path, grid: np.ndarray, lon_axis, lat_axis) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["lon", "lat", "value"])
        for j, la in enumerate(lat_axis):
            for i, lo in enumerate(lon_axis):
                w.writerow([repr(float(lo)), repr(float(la)), repr(float(grid[j][i]))])


@dataclass
class Sensor:
    """Additive-Gaussian-noise point sensor; owns its RNG stream."""

    noise_std: float
    rng_seed: int = 0
    rng: np.random.Generator = dc_field(init=False, repr=False)

    def __post_init__(self):
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        self.rng = np.random.default_rng(self.rng_seed)


def measure(field: SpatialField, sensor: Sensor, x) -> float:
    if not field.region.contains(x):
        raise OutOfBoundsError(f"measurement location {tuple(x)} outside {field.region}")
    value = field(np.asarray(x, dtype=float))
    # draw even when noise is zero so RNG streams advance identically
    eps = sensor.rng.normal(0.0, 1.0)
    return value + sensor.noise_std * eps


class FieldStats(NamedTuple):
    max_value: float
    max_location: tuple[float, float]
    min_value: float
    range: float


def field_stats(field: SpatialField, grid_resolution: int = 130) -> FieldStats:
    pts = field.region.grid(grid_resolution)
    vals = field(pts)
    i = int(np.argmax(vals))  # first occurrence wins ties
    vmax, vmin = float(vals[i]), float(np.min(vals))
    return FieldStats(vmax, (float(pts[i, 0]), float(pts[i, 1])), vmin, vmax - vmin)


def reference_stats(field: SpatialField, grid_resolution: int = 130) -> FieldStats:
    """Grid stats, but using the analytic maximum when the field knows it."""
    stats = field_stats(field, grid_resolution)
    if isinstance(field, SyntheticField):
        loc = field.global_max
        vmax = field(np.asarray(loc))
        return FieldStats(vmax, loc, stats.min_value, vmax - stats.min_value)
    return stats
