"""Experiment configuration: JSON schema, loading and resolution to typed objects."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema

from .field import PACIFIC_REGION, SpatialField, SyntheticField, load_gridded_field, make_four_maxima_field
from .gp import Hyperparameters
from .planner import PlannerConfig

SCHEMA_VERSION = 1

_point = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 3}
_region = {
    "type": "object",
    "additionalProperties": False,
    "required": ["x_min", "x_max", "y_min", "y_max"],
    "properties": {k: {"type": "number"} for k in ("x_min", "x_max", "y_min", "y_max")},
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hotspot-ipp experiment",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "field", "strategies", "budget"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "field": {
            "oneOf": [
                {"type": "object", "additionalProperties": False, "required": ["type"],
                 "properties": {"type": {"const": "four_maxima"}}},
                {"type": "object", "additionalProperties": False, "required": ["type", "bumps"],
                 "properties": {
                     "type": {"const": "synthetic"},
                     "region": _region,
                     "bumps": {"type": "array", "minItems": 1, "items": {
                         "type": "object", "additionalProperties": False,
                         "required": ["center", "height", "width"],
                         "properties": {"center": {"type": "array", "items": {"type": "number"},
                                                   "minItems": 2, "maxItems": 2},
                                        "height": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                                        "width": {"type": "number", "exclusiveMinimum": 0}}}}}},
                {"type": "object", "additionalProperties": False, "required": ["type", "path"],
                 "properties": {"type": {"const": "dataset"}, "path": {"type": "string"}}},
            ]
        },
        "strategies": {"type": "array", "minItems": 1, "uniqueItems": True,
                       "items": {"enum": ["TrueGP", "AdaptGP", "OptGP", "BST"]}},
        "budget": {"type": "number", "exclusiveMinimum": 0},
        "eta": {"type": "number", "minimum": 0},
        "noise_percent": {"type": "number", "minimum": 0},
        "seeds": {"oneOf": [{"type": "integer", "minimum": 1},
                            {"type": "array", "items": {"type": "integer"}, "minItems": 1}]},
        "start_pose": _point,
        "true_hyper": {
            "type": "object", "additionalProperties": False,
            "required": ["signal_std", "length_scales"],
            "properties": {"signal_std": {"type": "number", "exclusiveMinimum": 0},
                           "length_scales": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                                             "minItems": 2, "maxItems": 2},
                           "noise_var": {"type": ["number", "null"], "minimum": 0}}},
        "planner": {
            "type": "object", "additionalProperties": False,
            "properties": {"num_primitives": {"type": "integer", "minimum": 1},
                           "heading_fan": {"type": "array", "items": {"type": "number"},
                                           "minItems": 2, "maxItems": 2},
                           "step_length": {"type": "number", "exclusiveMinimum": 0},
                           "iteration_cap": {"type": "integer", "minimum": 1},
                           "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                           "grid_size": {"type": "integer", "minimum": 1}}},
        "bst": {"type": "object", "additionalProperties": False,
                "properties": {"lane_spacing": {"type": ["number", "null"], "exclusiveMinimum": 0}}},
        "fleet": {
            "type": "object", "additionalProperties": False,
            "required": ["k", "start_poses"],
            "properties": {"k": {"type": "integer", "minimum": 1},
                           "epochs": {"type": "integer", "minimum": 1},
                           "steps_per_epoch": {"type": "integer", "minimum": 1},
                           "start_poses": {"type": "array", "items": _point, "minItems": 1},
                           "partition_modes": {"type": "array", "minItems": 1, "uniqueItems": True,
                                               "items": {"enum": ["none", "voronoi"]}},
                           "detection_radius": {"type": "number", "exclusiveMinimum": 0},
                           "stop_when_all_detected": {"type": "boolean"}}},
        "checkpoint_every": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "eval_resolution": {"type": "integer", "minimum": 2},
        "output_dir": {"type": "string"},
    },
}

DEFAULTS = {
    "name": "experiment",
    "eta": 0.0,
    "noise_percent": 5.0,
    "seeds": 10,
    "planner": {},
    "bst": {"lane_spacing": None},
    "checkpoint_every": 10.0,
    "eval_resolution": 130,
    "output_dir": "runs",
}
FLEET_DEFAULTS = {"epochs": 10, "steps_per_epoch": 10, "partition_modes": ["voronoi"],
                  "detection_radius": 2.0, "stop_when_all_detected": False}


class ConfigError(ValueError):
    pass


def validate(raw: dict) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"  at /{'/'.join(str(p) for p in e.absolute_path)}: {e.message}" for e in errors]
        raise ConfigError("config does not match schema:\n" + "\n".join(lines))


def with_defaults(raw: dict) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    cfg.update(copy.deepcopy(raw))
    if "fleet" in cfg:
        fleet = dict(FLEET_DEFAULTS)
        fleet.update(cfg["fleet"])
        cfg["fleet"] = fleet
        if len(fleet["start_poses"]) != fleet["k"]:
            raise ConfigError("fleet.start_poses must list exactly k poses")
    if isinstance(cfg["seeds"], int):
        cfg["seeds"] = list(range(cfg["seeds"]))
    return cfg


@dataclass
class Experiment:
    raw: dict
    base_dir: Path
    _field: Optional[SpatialField] = field(default=None, repr=False)

    @property
    def name(self) -> str:
        return self.raw["name"]

    def build_field(self) -> SpatialField:
        if self._field is None:
            spec = self.raw["field"]
            if spec["type"] == "four_maxima":
                self._field = make_four_maxima_field()
            elif spec["type"] == "synthetic":
                self._field = SyntheticField.from_dict(spec)
            else:
                path = Path(spec["path"])
                if not path.is_absolute() and not path.exists():
                    path = self.base_dir / path  # relative to the working directory, then the config
                if not path.exists():
                    raise FileNotFoundError(f"dataset not found: {path}")
                self._field = load_gridded_field(path)
        return self._field

    @property
    def planner(self) -> PlannerConfig:
        return PlannerConfig.from_dict(self.raw["planner"])

    def true_hyper(self, noise_std: float) -> Hyperparameters:
        h = self.raw.get("true_hyper")
        if h is None:
            raise ConfigError("TrueGP and BST need 'true_hyper'")
        noise = h.get("noise_var")
        return Hyperparameters(h["signal_std"], tuple(h["length_scales"]),
                               noise_std ** 2 if noise is None else noise)


def load(path) -> Experiment:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    validate(raw)
    return Experiment(with_defaults(raw), path.parent)


def bundled_config(name: str) -> Path:
    return Path(__file__).parent / "configs" / name


__all__ = ["SCHEMA", "ConfigError", "Experiment", "load", "validate", "bundled_config",
           "PACIFIC_REGION"]
