"""Planar multi-robot tracking episodes.

Robots with disk-shaped fields of view choose one motion primitive per step while targets move in straight lines
and turn at random every few steps. Each step has a selection period, in which a policy picks primitives against
the targets' predicted next positions, and an execution period, in which robots and targets move and the actual
tracking quality is measured.
"""
import hashlib
import json
import logging
import math
import os
import warnings
from dataclasses import dataclass, fields, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from sata.constants import Columns, Geometry
from sata.core import Assignment, CommGraph, Instance, derive_comm_graph, eval_wta_from_x, target_coverage
from sata.greedy import greedy_distributed
from sata.local_solver import LocalParams, round_solution, solve_local
from sata.netsim import Network
from sata.oracle import random_baseline
from sata.seeding import make_rng

logger = logging.getLogger(__name__)

CONFIG_DIRECTORY = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'configs')
LIBRARIES = ('fan', 'random-heading')
QUALITY_MODES = ('count', 'inverse-distance')
POLICIES = ('greedy', 'local', 'random', 'parker')


class CommunicationAssumptionWarning(UserWarning):
    """Robots that share a target were farther apart than the communication range."""


@dataclass(frozen=True)
class SimConfig:
    arena_size: float
    robot_step: float
    target_step: float
    target_turn_period: int
    sensing_range: float
    comm_range: float
    library: str = 'fan'
    fan_headings: int = 20
    heading_fan_degrees: float = 30.0
    include_stay: bool = True
    quality_mode: str = 'count'
    steps: int = 200
    robot_count: int = 10
    target_count: int = 30
    moving_target_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ('arena_size', 'robot_step', 'target_step', 'sensing_range', 'comm_range'):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}.")
        if self.sensing_range > self.comm_range:
            raise ValueError(f"sensing_range ({self.sensing_range}) must not exceed comm_range ({self.comm_range}).")
        if self.target_turn_period < 1:
            raise ValueError("target_turn_period must be at least one step.")
        if self.library not in LIBRARIES:
            raise ValueError(f"library must be one of {LIBRARIES}, got {self.library!r}.")
        if self.quality_mode not in QUALITY_MODES:
            raise ValueError(f"quality_mode must be one of {QUALITY_MODES}, got {self.quality_mode!r}.")
        if self.library == 'fan' and self.fan_headings < 1:
            raise ValueError("The fan library needs at least one heading.")
        if self.robot_count < 1 or self.target_count < 0 or self.steps < 0:
            raise ValueError("robot_count must be positive; target_count and steps must be nonnegative.")
        if not 0 <= self.moving_target_fraction <= 1:
            raise ValueError(f"moving_target_fraction must lie in [0, 1], got {self.moving_target_fraction}.")

    def with_overrides(self, **overrides) -> 'SimConfig':
        return replace(self, **{key: value for key, value in overrides.items() if value is not None})


def available_presets() -> List[str]:
    return sorted(name[:-len('.json')] for name in os.listdir(CONFIG_DIRECTORY) if name.endswith('.json'))


def load_sim_config(name_or_path: str, **overrides) -> SimConfig:
    """Loads a shipped preset by name, or any JSON file with SimConfig fields. Keys starting with '_' are notes."""
    path = os.path.join(CONFIG_DIRECTORY, f'{name_or_path}.json') if name_or_path in available_presets() else name_or_path
    with open(path, 'r') as f:
        data = json.load(f)
    known = {field_.name for field_ in fields(SimConfig)}
    unknown = sorted(key for key in data if not key.startswith('_') and key not in known)
    if unknown:
        raise ValueError(f"{path} has unknown configuration keys {unknown}.")
    config = SimConfig(**{key: value for key, value in data.items() if key in known})
    return config.with_overrides(**overrides)


@dataclass
class WorldState:
    step: int
    robot_xy: np.ndarray
    robot_heading: np.ndarray
    target_xy: np.ndarray
    target_heading: np.ndarray
    target_prev_xy: np.ndarray
    steps_since_turn: np.ndarray
    mobile: np.ndarray

    def world_hash(self) -> str:
        digest = hashlib.sha256(str(self.step).encode('utf-8'))
        for array in (self.robot_xy, self.robot_heading, self.target_xy, self.target_heading, self.target_prev_xy,
                      self.steps_since_turn, self.mobile):
            digest.update(np.ascontiguousarray(array).tobytes())
        return digest.hexdigest()

    def predicted_targets(self) -> np.ndarray:
        """Linear extrapolation one step ahead."""
        return self.target_xy + (self.target_xy - self.target_prev_xy)


@dataclass(frozen=True)
class PrimitiveStateSet:
    poses: List[np.ndarray]  # per robot, rows of (x, y, heading)
    candidates: List[Tuple[int, ...]]  # per robot, the targets it observes now


def _unit(angles: np.ndarray) -> np.ndarray:
    return np.stack([np.cos(angles), np.sin(angles)], axis=-1)


def _inside(xy: np.ndarray, config: SimConfig) -> bool:
    return bool(np.all(xy >= 0) and np.all(xy <= config.arena_size))


def init_world(config: SimConfig, seed: Optional[int] = None) -> WorldState:
    rng = make_rng(config.seed if seed is None else seed, 'world-init')
    robot_xy = rng.uniform(0, config.arena_size, size=(config.robot_count, 2))
    robot_heading = rng.uniform(0, 2 * math.pi, size=config.robot_count)
    target_xy = rng.uniform(0, config.arena_size, size=(config.target_count, 2))
    target_heading = rng.uniform(0, 2 * math.pi, size=config.target_count)
    mobile = np.zeros(config.target_count, dtype=bool)
    mobile[rng.permutation(config.target_count)[:round(config.moving_target_fraction * config.target_count)]] = True
    # Mobile targets start as if they had already been moving, so the first prediction is linear too.
    target_prev_xy = target_xy - np.where(mobile[:, None], config.target_step * _unit(target_heading), 0.0)
    return WorldState(0, robot_xy, robot_heading, target_xy, target_heading, target_prev_xy,
                      np.zeros(config.target_count, dtype=int), mobile)


def step_targets(world: WorldState, config: SimConfig, rng: np.random.Generator) -> WorldState:
    """Advances mobile targets one step; headings are resampled every turn period and whenever a wall is hit."""
    target_xy = world.target_xy.copy()
    heading = world.target_heading.copy()
    counter = world.steps_since_turn.copy()
    center = np.full(2, config.arena_size / 2)
    for j in np.flatnonzero(world.mobile):
        proposed = world.target_xy[j] + config.target_step * _unit(heading[j])
        attempts = 0
        while not _inside(proposed, config) and attempts < Geometry.HEADING_RESAMPLE_ATTEMPTS:
            heading[j] = rng.uniform(0, 2 * math.pi)
            proposed = world.target_xy[j] + config.target_step * _unit(heading[j])
            attempts += 1
        if not _inside(proposed, config):
            offset = center - world.target_xy[j]
            heading[j] = math.atan2(offset[1], offset[0])
            proposed = world.target_xy[j] + config.target_step * _unit(heading[j])
        target_xy[j] = np.clip(proposed, 0, config.arena_size)
        counter[j] += 1
        if counter[j] >= config.target_turn_period:
            heading[j] = rng.uniform(0, 2 * math.pi)
            counter[j] = 0
    return WorldState(world.step + 1, world.robot_xy, world.robot_heading, target_xy, heading, world.target_xy.copy(), counter,
                      world.mobile)


def _observed_by(observer_xy: np.ndarray, target_xy: np.ndarray, sensing_range: float) -> np.ndarray:
    """Boolean (observers x targets) visibility matrix."""
    if not len(target_xy):
        return np.zeros((len(observer_xy), 0), dtype=bool)
    distances = np.linalg.norm(observer_xy[:, None, :] - target_xy[None, :, :], axis=2)
    return distances <= sensing_range


def build_primitives(world: WorldState, config: SimConfig, rng: np.random.Generator) -> PrimitiveStateSet:
    visible = _observed_by(world.robot_xy, world.target_xy, config.sensing_range)
    poses, candidates = [], []
    for i in range(config.robot_count):
        position, current = world.robot_xy[i], world.robot_heading[i]
        rows = [[position[0], position[1], current]] if config.include_stay else []
        if config.library == 'fan':
            headings = 2 * math.pi * np.arange(config.fan_headings) / config.fan_headings
            lengths = np.full(config.fan_headings, config.robot_step)
        else:
            spread = math.radians(config.heading_fan_degrees)
            headings = np.array([current + rng.uniform(-spread, spread)])
            lengths = np.array([config.robot_step * (1.0 - rng.random())])
        moved = np.clip(position + lengths[:, None] * _unit(headings), 0, config.arena_size)
        rows.extend([x, y, heading] for (x, y), heading in zip(moved, headings))
        poses.append(np.array(rows, dtype=float))
        candidates.append(tuple(int(j) + 1 for j in np.flatnonzero(visible[i])))
    return PrimitiveStateSet(poses, candidates)


def _quality(distance: float, config: SimConfig) -> float:
    if config.quality_mode == 'count':
        return 1.0
    return 1.0 / max(distance, Geometry.MIN_DISTANCE)


def snapshot_instance(world: WorldState, primitives: PrimitiveStateSet, config: SimConfig) -> Instance:
    """The step's SATA instance: candidate poses against predicted targets, restricted to targets each robot sees now."""
    predicted = world.predicted_targets()
    weights = {}
    for i, (poses, candidates) in enumerate(zip(primitives.poses, primitives.candidates), start=1):
        for m, pose in enumerate(poses, start=1):
            for j in candidates:
                distance = float(np.linalg.norm(pose[:2] - predicted[j - 1]))
                if distance <= config.sensing_range:
                    weights[(i, m, j)] = _quality(distance, config)
    return Instance(config.robot_count, tuple(len(poses) for poses in primitives.poses), config.target_count, weights)


def comm_graph_from_positions(robot_xy: np.ndarray, comm_range: float) -> CommGraph:
    distances = np.linalg.norm(robot_xy[:, None, :] - robot_xy[None, :, :], axis=2)
    count = len(robot_xy)
    edges = frozenset((i + 1, l + 1) for i in range(count) for l in range(i + 1, count) if distances[i, l] <= comm_range)
    return CommGraph(count, edges)


def count_assumption_violations(inst: Instance, robot_xy: np.ndarray, comm_range: float) -> int:
    """Robot pairs that share a target in the snapshot but are out of communication range."""
    return sum(1 for i, l in derive_comm_graph(inst).edges if np.linalg.norm(robot_xy[i - 1] - robot_xy[l - 1]) > comm_range)


def parker_policy(world: WorldState, config: SimConfig) -> np.ndarray:
    """Force-vector displacements: unit attraction to each visible target, unit repulsion from robots within half the comm range."""
    displacement = np.zeros_like(world.robot_xy)
    for i, position in enumerate(world.robot_xy):
        force = np.zeros(2)
        for target in world.target_xy:
            offset = target - position
            distance = np.linalg.norm(offset)
            if 0 < distance <= config.sensing_range:
                force += offset / distance
        for l, other in enumerate(world.robot_xy):
            offset = other - position
            distance = np.linalg.norm(offset)
            if l != i and 0 < distance <= config.comm_range / 2:
                force -= offset / distance
        magnitude = np.linalg.norm(force)
        if magnitude > 1e-12:
            displacement[i] = config.robot_step * force / magnitude
    return displacement


def _exploration_heading(position: np.ndarray, heading: float, config: SimConfig) -> float:
    """Keeps the current heading, mirrored off any wall the next step would cross."""
    direction = _unit(np.array(heading))
    ahead = position + config.robot_step * direction
    direction = np.where((ahead < 0) | (ahead > config.arena_size), -direction, direction)
    return math.atan2(direction[1], direction[0])


def preferred_displacement(world: WorldState, config: SimConfig) -> np.ndarray:
    """Per robot, where it would rather go when the objective does not care: along the force vector, else straight on."""
    displacement = parker_policy(world, config)
    for i in np.flatnonzero(np.linalg.norm(displacement, axis=1) == 0):
        heading = _exploration_heading(world.robot_xy[i], float(world.robot_heading[i]), config)
        displacement[i] = config.robot_step * _unit(np.array(heading))
    return displacement


def rank_primitives(world: WorldState, primitives: PrimitiveStateSet, config: SimConfig) -> PrimitiveStateSet:
    """Reorders each robot's library so the primitive closest to its preferred displacement comes first.

    The solvers break ties toward the lowest primitive index, so the ranking decides between primitives the
    objective values equally. The library itself is unchanged.
    """
    goals = world.robot_xy + preferred_displacement(world, config)
    poses = []
    for goal, rows in zip(goals, primitives.poses):
        order = np.argsort(np.linalg.norm(rows[:, :2] - goal, axis=1), kind='stable')
        poses.append(rows[order])
    return PrimitiveStateSet(poses, primitives.candidates)


def measure_actual(world: WorldState, config: SimConfig) -> Tuple[float, np.ndarray]:
    """Tracking quality after execution: each target within range counts once, through its best observer.

    Returns:
        The objective and the boolean mask of observed targets.
    """
    if not config.target_count:
        return 0.0, np.zeros(0, dtype=bool)
    distances = np.linalg.norm(world.robot_xy[:, None, :] - world.target_xy[None, :, :], axis=2)
    nearest = distances.min(axis=0)
    observed = nearest <= config.sensing_range
    if config.quality_mode == 'count':
        return float(observed.sum()), observed
    return float((1.0 / np.maximum(nearest[observed], Geometry.MIN_DISTANCE)).sum()), observed


@dataclass
class _Streams:
    targets: np.random.Generator
    primitives: np.random.Generator
    policy: np.random.Generator

    @classmethod
    def for_episode(cls, seed: int, policy: str) -> '_Streams':
        return cls(make_rng(seed, 'targets'), make_rng(seed, 'primitives'), make_rng(seed, 'policy', policy))


@dataclass
class _Selection:
    robot_xy: np.ndarray
    robot_heading: np.ndarray
    estimated: float
    estimated_bottleneck: float
    rounds: int
    bytes: int
    violations: int


def _select(world: WorldState, config: SimConfig, policy: str, params: LocalParams, streams: _Streams) -> _Selection:
    """Selection period: the policy decides every robot's next pose."""
    if policy == 'parker':
        displacement = parker_policy(world, config)
        robot_xy = np.clip(world.robot_xy + displacement, 0, config.arena_size)
        moving = np.linalg.norm(displacement, axis=1) > 0
        heading = np.where(moving, np.arctan2(displacement[:, 1], displacement[:, 0]), world.robot_heading)
        return _Selection(robot_xy, heading, math.nan, math.nan, 0, 0, 0)

    primitives = build_primitives(world, config, streams.primitives)
    if policy != 'random':
        primitives = rank_primitives(world, primitives, config)
    snapshot = snapshot_instance(world, primitives, config)
    violations = count_assumption_violations(snapshot, world.robot_xy, config.comm_range)
    network = Network(comm_graph_from_positions(world.robot_xy, config.comm_range))
    rounds = 0
    if policy == 'greedy':
        assignment, rounds = greedy_distributed(snapshot, network)
    elif policy == 'local':
        fractional, rounds = solve_local(snapshot, params, network)
        assignment = round_solution(snapshot, fractional)
    else:
        assignment = random_baseline(snapshot, streams.policy)
    chosen = assignment.chosen_primitive
    sent = network.last_log.total_bytes if network.logs else 0

    estimated, _ = eval_wta_from_x(snapshot, chosen)
    covered = snapshot.covered_targets
    coverage = target_coverage(snapshot, Assignment(dict(chosen)))
    estimated_bottleneck = float(min(coverage[j - 1] for j in covered)) if covered else math.nan

    poses = np.array([primitives.poses[i - 1][chosen[i] - 1] for i in snapshot.robots])
    return _Selection(poses[:, :2].copy(), poses[:, 2].copy(), estimated, estimated_bottleneck, rounds, sent, violations)


def run_episode(config: SimConfig, policy: str, h: int = 2, epsilon: float = 0.1, seed: Optional[int] = None,
                world: Optional[WorldState] = None) -> pd.DataFrame:
    """Runs config.steps selection/execution steps and returns one row per step.

    The initial world and the target motion depend only on the seed, so episodes of different policies with the
    same seed start from the same world and face the same target trajectories.
    """
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}, got {policy!r}.")
    seed = config.seed if seed is None else seed
    params = LocalParams(h, epsilon)
    world = world if world is not None else init_world(config, seed)
    streams = _Streams.for_episode(seed, policy)
    observed_so_far = np.zeros(config.target_count, dtype=bool)

    rows = []
    for _ in range(config.steps):
        world_hash = world.world_hash()
        selection = _select(world, config, policy, params, streams)
        world = replace(world, robot_xy=selection.robot_xy, robot_heading=selection.robot_heading)
        world = step_targets(world, config, streams.targets)
        actual, observed = measure_actual(world, config)
        observed_so_far |= observed
        rows.append([world.step - 1, policy, selection.estimated, actual, selection.rounds, selection.bytes,
                     seed, config.target_count, selection.estimated_bottleneck, int(observed_so_far.sum()), selection.violations,
                     world_hash])

    frame = pd.DataFrame(rows, columns=Columns.EPISODE + Columns.EPISODE_EXTRA)
    violations = int(frame['assumption_violations'].sum()) if len(frame) else 0
    if violations:
        warnings.warn(f"{violations} robot pairs shared a target while out of communication range (seed {seed}, policy {policy}).",
                      CommunicationAssumptionWarning)
    logger.debug("Episode seed=%d policy=%s: mean actual %.3f over %d steps.", seed, policy,
                 frame['actual'].mean() if len(frame) else math.nan, len(frame))
    return frame


def compare_single_step(config: SimConfig, seeds: Sequence[int], policies: Sequence[str] = ('greedy', 'parker')) -> pd.DataFrame:
    """Runs one step of each policy from the same fresh world per seed and reports the actual objective."""
    rows = []
    for seed in seeds:
        start = init_world(config, seed)
        for policy in policies:
            frame = run_episode(replace(config, steps=1), policy, seed=seed, world=start)
            rows.append([seed, config.target_count, policy, float(frame['actual'].iloc[0]), frame['world_hash'].iloc[0]])
    return pd.DataFrame(rows, columns=['seed', 'target_count', 'policy', 'actual', 'world_hash'])


def summarize_episode(frame: pd.DataFrame) -> pd.DataFrame:
    """Per (seed, target count, policy): time-mean and spread of the actual objective and the final number of targets seen."""
    grouped = frame.groupby(['seed', 'target_count', 'policy'], sort=True)
    summary = grouped.agg(mean_actual=('actual', 'mean'),
                          std_actual=('actual', 'std'),
                          mean_estimated=('estimated', 'mean'),
                          final_observed=('observed_total', 'last'),
                          mean_rounds=('rounds', 'mean'),
                          total_bytes=('bytes', 'sum'))
    return summary.reset_index()


def histogram_table(values: Sequence[float], bins: int = 10) -> Tuple[pd.DataFrame, Dict[str, float]]:
    """Histogram counts ready for CSV, plus the min, median and max marked on the plotted histograms."""
    values = np.asarray(values, dtype=float)
    values = values[~np.isnan(values)]
    if not len(values):
        return pd.DataFrame(columns=['bin_left', 'bin_right', 'count']), {'min': math.nan, 'median': math.nan, 'max': math.nan}
    counts, edges = np.histogram(values, bins=bins)
    table = pd.DataFrame({'bin_left': edges[:-1], 'bin_right': edges[1:], 'count': counts})
    return table, {'min': float(values.min()), 'median': float(np.median(values)), 'max': float(values.max())}
