"""GP-MCTS: Monte Carlo tree search over motion primitives with GP-UCB rewards.

Each planning call grows a fresh tree from the robot's pose.  Nodes are
poses reached by chaining motion primitives; a simulation from a new node
is a random-policy walk whose length is the remaining step budget minus
the node's depth, scored by the average of ``mu + sqrt(beta_t) * sigma``
over the visited states.  The returned move is the root child with the
best mean value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .field import Region
from .gp import GPModel

UCT_EXPLORATION = 2.0
ESCAPE_LOOKAHEAD = 4  # four 45-degree turns reverse the heading


class PlannerStuckError(RuntimeError):
    """No motion primitive from the root pose stays feasible."""


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float = 0.0

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def distance_to(self, other: "Pose") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)

    @classmethod
    def facing(cls, x: float, y: float, target) -> "Pose":
        return cls(x, y, math.atan2(target[1] - y, target[0] - x))


@dataclass
class PlannerConfig:
    num_primitives: int = 5
    heading_fan: tuple[float, float] = (-math.pi / 4, math.pi / 4)
    step_length: float = 1.0
    iteration_cap: int = 50
    delta: float = 0.1
    grid_size: int = 16900

    def __post_init__(self):
        if self.iteration_cap < 1:
            raise ValueError("iteration_cap must be >= 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.num_primitives < 1 or self.step_length <= 0:
            raise ValueError("need at least one primitive and a positive step length")
        self.heading_fan = tuple(self.heading_fan)

    @property
    def offsets(self) -> np.ndarray:
        if self.num_primitives == 1:
            return np.array([0.5 * (self.heading_fan[0] + self.heading_fan[1])])
        return np.linspace(self.heading_fan[0], self.heading_fan[1], self.num_primitives)

    def to_dict(self) -> dict:
        return {"num_primitives": self.num_primitives, "heading_fan": list(self.heading_fan),
                "step_length": self.step_length, "iteration_cap": self.iteration_cap,
                "delta": self.delta, "grid_size": self.grid_size}

    @classmethod
    def from_dict(cls, d: dict) -> "PlannerConfig":
        d = dict(d)
        if "heading_fan" in d:
            d["heading_fan"] = tuple(d["heading_fan"])
        return cls(**d)


@dataclass(frozen=True)
class Cell:
    """Discrete Voronoi cell: points whose nearest generator is ``index``."""

    generators: np.ndarray
    index: int

    def contains(self, point) -> bool:
        return kernels.in_cell(float(point[0]), float(point[1]), self.generators, self.index)


def beta(t: int, config: PlannerConfig) -> float:
    """Exploration weight ``2 sqrt(t) log(|D| pi^2 / (6 delta))``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    return 2.0 * math.sqrt(t) * math.log(config.grid_size * math.pi ** 2 / (6.0 * config.delta))


def feasible_primitives(pose: Pose, config: PlannerConfig, region: Region,
                        cell: Optional[Cell] = None) -> list[tuple[int, Pose]]:
    out = []
    for i, off in enumerate(config.offsets):
        h = kernels.wrap_angle(pose.heading + off)
        nx = pose.x + config.step_length * math.cos(h)
        ny = pose.y + config.step_length * math.sin(h)
        if region.contains((nx, ny)) and (cell is None or cell.contains((nx, ny))):
            out.append((i, Pose(nx, ny, h)))
    return out


def has_escape(pose: Pose, config: PlannerConfig, region: Region,
               depth: int = ESCAPE_LOOKAHEAD) -> bool:
    """True if some chain of ``depth`` primitives from ``pose`` stays inside ``region``."""
    if depth <= 0:
        return True
    x0, x1, y0, y1 = region.bounds
    margin = min(pose.x - x0, x1 - pose.x, pose.y - y0, y1 - pose.y)
    if margin > depth * config.step_length:
        return True
    return any(has_escape(p, config, region, depth - 1)
               for _, p in feasible_primitives(pose, config, region))


def motion_primitives(pose: Pose, config: PlannerConfig, region: Region,
                      cell: Optional[Cell] = None) -> list[Pose]:
    """Successor poses for the heading fan, relative to the current heading."""
    return [p for _, p in feasible_primitives(pose, config, region, cell)]


@dataclass(eq=False)
class MctsNode:
    pose: Pose
    depth: int = 0
    parent: Optional["MctsNode"] = None
    q: float = 0.0
    visits: int = 0
    simulations: int = 0
    children: dict[int, "MctsNode"] = field(default_factory=dict)
    untried: list[tuple[int, Pose]] = field(default_factory=list)

    @property
    def fully_expanded(self) -> bool:
        return not self.untried

    @property
    def value(self) -> float:
        return self.q / self.visits if self.visits else -math.inf

    def ordered_children(self) -> list["MctsNode"]:
        return [self.children[k] for k in sorted(self.children)]


def uct_select(node: MctsNode) -> MctsNode:
    """Child maximising ``Q/n + 2 sqrt(log(n_parent) / n)``; lowest index wins ties."""
    log_n = math.log(node.visits)
    best, best_score = None, -math.inf
    for child in node.ordered_children():
        score = child.q / child.visits + UCT_EXPLORATION * math.sqrt(log_n / child.visits)
        if score > best_score:
            best, best_score = child, score
    return best


class _Search:
    def __init__(self, gp, root_pose, horizon, t, config, rng, region, cell):
        self.gp = gp
        self.config = config
        self.rng = rng
        self.region = region
        self.cell = cell
        self.horizon = horizon
        self.sqrt_beta = math.sqrt(beta(t, config))
        self.offsets = config.offsets
        self.bounds = region.bounds
        self.root = self._make_node(root_pose, 0, None)

    def _make_node(self, pose, depth, parent):
        node = MctsNode(pose, depth, parent)
        if depth < self.horizon:
            node.untried = feasible_primitives(pose, self.config, self.region, self.cell)
        return node

    def select(self) -> MctsNode:
        v = self.root
        while v.fully_expanded and v.children:
            v = uct_select(v)
        return v

    def expand(self, v: MctsNode) -> MctsNode:
        if not v.untried:
            return v  # terminal: depth limit or no feasible primitive
        idx, pose = v.untried.pop(int(self.rng.integers(len(v.untried))))
        child = self._make_node(pose, v.depth + 1, v)
        v.children[idx] = child
        return child

    def simulate(self, v: MctsNode) -> float:
        depth = max(self.horizon - v.depth, 0)
        draws = self.rng.integers(0, len(self.offsets), size=(depth, kernels._kernels_py.MAX_ATTEMPTS))
        gens = self.cell.generators if self.cell is not None else None
        own = self.cell.index if self.cell is not None else -1
        path = kernels.rollout_path(v.pose.x, v.pose.y, v.pose.heading, depth,
                                    self.config.step_length, self.offsets, self.bounds,
                                    draws, gens, own)
        intended = depth
        if v is not self.root:
            path = np.vstack([v.pose.position[None, :], path])
            intended += 1
        if not len(path):
            return 0.0
        mean, std = self.gp.predict(path)
        # a walk cut short by the boundary forfeits the states it never reached
        return float(np.sum(mean + self.sqrt_beta * std)) / intended

    @staticmethod
    def backpropagate(v: MctsNode, reward: float) -> None:
        v.simulations += 1
        while v is not None:
            v.q += reward
            v.visits += 1
            v = v.parent

    def iterate(self) -> None:
        leaf = self.expand(self.select())
        self.backpropagate(leaf, self.simulate(leaf))


def build_tree(gp: GPModel, root_pose: Pose, remaining_budget: float, t: int,
               config: PlannerConfig, rng: np.random.Generator, region: Region,
               cell: Optional[Cell] = None, step_cost: Optional[float] = None,
               iterations: Optional[int] = None) -> MctsNode:
    step_cost = config.step_length if step_cost is None else step_cost
    horizon = int(math.floor(remaining_budget / step_cost + 1e-9))
    search = _Search(gp, root_pose, horizon, t, config, rng, region, cell)
    for _ in range(config.iteration_cap if iterations is None else iterations):
        search.iterate()
    return search.root


def plan_next(gp: GPModel, root_pose: Pose, remaining_budget: float, t: int,
              config: PlannerConfig, rng: np.random.Generator, region: Region,
              cell: Optional[Cell] = None, step_cost: Optional[float] = None) -> Pose:
    """Next pose for the robot: the root child with the highest mean reward."""
    step_cost = config.step_length if step_cost is None else step_cost
    if remaining_budget + 1e-9 < step_cost:
        raise ValueError("remaining budget does not cover a single step")
    if not feasible_primitives(root_pose, config, region, cell):
        raise PlannerStuckError(f"no feasible motion primitive from {root_pose}")
    root = build_tree(gp, root_pose, remaining_budget, t, config, rng, region, cell, step_cost)
    children = root.ordered_children()
    # never step into a pose from which the region boundary allows no way out
    safe = [c for c in children if has_escape(c.pose, config, region)]
    if not safe:
        if cell is not None:
            raise PlannerStuckError(f"every move inside the cell from {root_pose} is a dead end")
        safe = children
    best = max(safe, key=lambda c: c.value)  # first max wins ties
    return best.pose


def check_visit_counts(root: MctsNode) -> bool:
    """Every node's visits equal its children's visits plus its own simulations."""
    stack = [root]
    while stack:
        v = stack.pop()
        if v.visits != sum(c.visits for c in v.children.values()) + v.simulations:
            return False
        stack.extend(v.children.values())
    return True
