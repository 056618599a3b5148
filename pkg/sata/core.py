"""Defines the combinatorial SATA model: instances, assignments, fractional solutions and the
communication graph, together with the objective evaluators for the Bottleneck and WinnerTakesAll variants.

Robots, primitives and targets are numbered from 1. Weights are sparse: an absent (robot, primitive, target)
key means the target is not observable from that primitive.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple, Union

import networkx as nx
import numpy as np

from sata.constants import Tolerances

WeightKey = Tuple[int, int, int]
PrimitiveKey = Tuple[int, int]

# Bottleneck value of an instance without targets: the minimum over an empty set.
VACUOUS = math.inf


class SATAError(Exception):
    """Base class for errors raised by the toolkit."""


class InstanceDimensionError(SATAError, ValueError):
    """A solution refers to robots, primitives or targets that the instance does not have."""


class MissingOwnershipError(SATAError, ValueError):
    """The WinnerTakesAll objective needs a target_owner map."""


class EnumerationCapExceeded(SATAError, ValueError):
    """The number of integral assignments is above the enumeration cap."""


class InvalidOrderError(SATAError, ValueError):
    """A robot ordering is not a permutation of the robots it should order."""


@dataclass(frozen=True)
class Instance:
    """Tripartite sensing graph: robots, their motion primitives, targets and edge weights c_{i,m}^j."""
    robot_count: int
    primitives_per_robot: Tuple[int, ...]
    target_count: int
    weights: Dict[WeightKey, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'primitives_per_robot', tuple(int(count) for count in self.primitives_per_robot))
        object.__setattr__(self, 'weights', {(int(i), int(m), int(j)): float(c) for (i, m, j), c in dict(self.weights).items()})

    @property
    def robots(self) -> range:
        return range(1, self.robot_count + 1)

    @property
    def targets(self) -> range:
        return range(1, self.target_count + 1)

    def primitive_count(self, robot: int) -> int:
        return self.primitives_per_robot[robot - 1]

    @cached_property
    def total_primitives(self) -> int:
        return sum(self.primitives_per_robot)

    @cached_property
    def primitive_keys(self) -> List[PrimitiveKey]:
        """(robot, primitive) pairs in row order of the coverage matrix."""
        return [(i, m) for i in self.robots for m in range(1, self.primitive_count(i) + 1)]

    @cached_property
    def _offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.primitives_per_robot)]).astype(int)

    def row(self, robot: int, primitive: int) -> int:
        return int(self._offsets[robot - 1]) + primitive - 1

    @cached_property
    def coverage_matrix(self) -> np.ndarray:
        """Dense (total primitives x targets) matrix of weights."""
        matrix = np.zeros((self.total_primitives, self.target_count))
        for (i, m, j), c in self.weights.items():
            if not (1 <= i <= self.robot_count and 1 <= m <= self.primitive_count(i) and 1 <= j <= self.target_count):
                raise InstanceDimensionError(f"Weight key {(i, m, j)} lies outside the instance; run validate_instance first.")
            matrix[self.row(i, m), j - 1] = c
        matrix.setflags(write=False)
        return matrix

    def robot_block(self, robot: int) -> np.ndarray:
        """Rows of the coverage matrix belonging to one robot, shape (|P^i|, targets)."""
        return self.coverage_matrix[self._offsets[robot - 1]:self._offsets[robot]]

    def weight(self, robot: int, primitive: int, target: int) -> float:
        return self.weights.get((robot, primitive, target), 0.0)

    @cached_property
    def covering_robots(self) -> Dict[int, Tuple[int, ...]]:
        """For each target, the robots owning at least one primitive with positive weight on it."""
        covering = {j: set() for j in self.targets}
        for (i, m, j), c in self.weights.items():
            if c > 0:
                covering[j].add(i)
        return {j: tuple(sorted(robots)) for j, robots in covering.items()}

    @cached_property
    def covered_targets(self) -> Tuple[int, ...]:
        return tuple(j for j in self.targets if self.covering_robots[j])

    def scaled(self, factor: float) -> 'Instance':
        return Instance(self.robot_count, self.primitives_per_robot, self.target_count,
                        {key: c * factor for key, c in self.weights.items()})

    def relabeled(self, robot_permutation: Mapping[int, int]) -> 'Instance':
        """Returns the instance with robot i renamed robot_permutation[i]."""
        primitives = [0] * self.robot_count
        for i in self.robots:
            primitives[robot_permutation[i] - 1] = self.primitive_count(i)
        return Instance(self.robot_count, tuple(primitives), self.target_count,
                        {(robot_permutation[i], m, j): c for (i, m, j), c in self.weights.items()})


@dataclass(frozen=True)
class Assignment:
    """Integral solution: one primitive per robot (x) and optionally one owning robot per target (y)."""
    chosen_primitive: Dict[int, int]
    target_owner: Optional[Dict[int, int]] = None


@dataclass(frozen=True)
class FractionalSolution:
    """Solution of the LP relaxation: x in [0, 1] per (robot, primitive) and the bottleneck value w."""
    x: Dict[PrimitiveKey, float]
    w: float

    def robot_mass(self, robot: int) -> float:
        return sum(value for (i, _), value in self.x.items() if i == robot)

    def as_vector(self, inst: Instance) -> np.ndarray:
        _check_fractional(inst, self)
        vector = np.zeros(inst.total_primitives)
        for (i, m), value in self.x.items():
            vector[inst.row(i, m)] = value
        return vector

    def satisfies_invariants(self, inst: Instance) -> bool:
        if any(value < -Tolerances.NEGATIVE_X for value in self.x.values()):
            return False
        return all(self.robot_mass(i) <= 1 + Tolerances.SIMPLEX_SLACK for i in inst.robots)


@dataclass(frozen=True)
class CommGraph:
    """Undirected robot-to-robot communication graph; edges are stored as (low id, high id)."""
    robot_count: int
    edges: FrozenSet[Tuple[int, int]] = frozenset()

    def __post_init__(self):
        normalized = set()
        for i, l in self.edges:
            if i == l:
                raise ValueError(f"Communication graphs have no self-loops, got ({i}, {l}).")
            if not (1 <= i <= self.robot_count and 1 <= l <= self.robot_count):
                raise InstanceDimensionError(f"Edge ({i}, {l}) refers to a robot outside 1..{self.robot_count}.")
            normalized.add((min(i, l), max(i, l)))
        object.__setattr__(self, 'edges', frozenset(normalized))

    @classmethod
    def complete(cls, robot_count: int) -> 'CommGraph':
        return cls(robot_count, frozenset((i, l) for i in range(1, robot_count + 1) for l in range(i + 1, robot_count + 1)))

    @property
    def robots(self) -> range:
        return range(1, self.robot_count + 1)

    def has_edge(self, i: int, l: int) -> bool:
        return (min(i, l), max(i, l)) in self.edges

    def neighbors(self, robot: int) -> Tuple[int, ...]:
        return tuple(sorted(self.to_networkx().neighbors(robot)))

    @cached_property
    def _graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.robots)
        graph.add_edges_from(sorted(self.edges))
        return graph

    def to_networkx(self) -> nx.Graph:
        return self._graph

    def diameter(self) -> int:
        """Largest eccentricity over all connected components (0 for edgeless graphs)."""
        graph = self.to_networkx()
        return max((nx.diameter(graph.subgraph(nodes)) for nodes in nx.connected_components(graph)), default=0)

    def ball(self, center: int, radius: int) -> Tuple[int, ...]:
        """Robots within radius hops of center."""
        distances = nx.single_source_shortest_path_length(self.to_networkx(), center, cutoff=radius)
        return tuple(sorted(distances))


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_instance(inst: Instance) -> ValidationReport:
    """Checks every Instance invariant and lists each violation instead of raising."""
    violations = []
    if inst.robot_count < 1:
        violations.append(f"robot_count must be positive, got {inst.robot_count}.")
    if len(inst.primitives_per_robot) != inst.robot_count:
        violations.append(f"primitives_per_robot has {len(inst.primitives_per_robot)} entries for {inst.robot_count} robots.")
    for i, count in enumerate(inst.primitives_per_robot, start=1):
        if count < 1:
            violations.append(f"robot {i} declares {count} primitives; at least one is required.")
    if inst.target_count < 0:
        violations.append(f"target_count must be nonnegative, got {inst.target_count}.")

    for (i, m, j), c in sorted(inst.weights.items()):
        edge = f"edge (robot {i}, primitive {m}, target {j})"
        if not 1 <= i <= min(inst.robot_count, len(inst.primitives_per_robot)):
            violations.append(f"{edge}: robot index outside 1..{inst.robot_count}.")
        elif not 1 <= m <= inst.primitives_per_robot[i - 1]:
            violations.append(f"{edge}: primitive index outside 1..{inst.primitives_per_robot[i - 1]} declared for robot {i}.")
        if not 1 <= j <= inst.target_count:
            violations.append(f"{edge}: target index outside 1..{inst.target_count}.")
        if not math.isfinite(c):
            violations.append(f"{edge}: weight {c} is not finite.")
        elif c < 0:
            violations.append(f"{edge}: weight {c} is negative.")
    return ValidationReport(tuple(violations))


def derive_comm_graph(inst: Instance) -> CommGraph:
    """Connects every pair of distinct robots that can both observe some target."""
    edges = set()
    for robots in inst.covering_robots.values():
        for a, first in enumerate(robots):
            for second in robots[a + 1:]:
                edges.add((first, second))
    return CommGraph(inst.robot_count, frozenset(edges))


def is_vacuous(value: float) -> bool:
    return math.isinf(value) and value > 0


def _check_assignment(inst: Instance, sol: Assignment):
    for robot, primitive in sol.chosen_primitive.items():
        if not 1 <= robot <= inst.robot_count:
            raise InstanceDimensionError(f"Assignment names robot {robot}; the instance has {inst.robot_count} robots.")
        if not 1 <= primitive <= inst.primitive_count(robot):
            raise InstanceDimensionError(f"Robot {robot} has no primitive {primitive} (it has {inst.primitive_count(robot)}).")
    for target, robot in (sol.target_owner or {}).items():
        if not 1 <= target <= inst.target_count:
            raise InstanceDimensionError(f"Assignment owns target {target}; the instance has {inst.target_count} targets.")
        if not 1 <= robot <= inst.robot_count:
            raise InstanceDimensionError(f"Target {target} is owned by unknown robot {robot}.")


def _check_fractional(inst: Instance, sol: FractionalSolution):
    for robot, primitive in sol.x:
        if not (1 <= robot <= inst.robot_count and 1 <= primitive <= inst.primitive_count(robot)):
            raise InstanceDimensionError(f"Fractional solution names primitive {(robot, primitive)} which the instance does not have.")


def indicator_vector(inst: Instance, chosen_primitive: Mapping[int, int]) -> np.ndarray:
    vector = np.zeros(inst.total_primitives)
    for robot, primitive in chosen_primitive.items():
        vector[inst.row(robot, primitive)] = 1.0
    return vector


def target_coverage(inst: Instance, sol: Union[Assignment, FractionalSolution]) -> np.ndarray:
    """Per-target sums of c_{i,m}^j x_m^i."""
    if isinstance(sol, Assignment):
        _check_assignment(inst, sol)
        x = indicator_vector(inst, sol.chosen_primitive)
    else:
        x = sol.as_vector(inst)
    return inst.coverage_matrix.T @ x


def eval_bottleneck(inst: Instance, sol: Union[Assignment, FractionalSolution]) -> float:
    """Minimum over targets of the summed tracking quality; VACUOUS when there are no targets."""
    coverage = target_coverage(inst, sol)
    if inst.target_count == 0:
        return VACUOUS
    return float(coverage.min())


def eval_wta(inst: Instance, sol: Assignment) -> float:
    """Total quality where each target counts only through its owning robot."""
    if sol.target_owner is None:
        raise MissingOwnershipError("eval_wta needs an assignment with target_owner populated.")
    _check_assignment(inst, sol)
    total = 0.0
    for target, robot in sol.target_owner.items():
        if robot in sol.chosen_primitive:
            total += inst.weight(robot, sol.chosen_primitive[robot], target)
    return total


def eval_wta_from_x(inst: Instance, chosen_primitive: Mapping[int, int]) -> Tuple[float, Dict[int, int]]:
    """Evaluates WinnerTakesAll from x alone by giving every target to its best observer.

    Ties go to the lowest robot id; targets nobody observes stay unowned and contribute 0.
    """
    _check_assignment(inst, Assignment(dict(chosen_primitive)))
    robots = sorted(chosen_primitive)
    if not robots or inst.target_count == 0:
        return 0.0, {}
    rows = inst.coverage_matrix[[inst.row(i, chosen_primitive[i]) for i in robots]]
    best = rows.max(axis=0)
    winners = rows.argmax(axis=0)  # First maximum, i.e. the lowest robot id.
    owners = {j: robots[winners[j - 1]] for j in inst.targets if best[j - 1] > 0}
    return float(best.sum()), owners


def induced_assignment(inst: Instance, chosen_primitive: Mapping[int, int]) -> Assignment:
    _, owners = eval_wta_from_x(inst, chosen_primitive)
    return Assignment(dict(chosen_primitive), owners)


def complete_choice(inst: Instance, chosen_primitive: Mapping[int, int]) -> Dict[int, int]:
    """Fills robots without a choice with primitive 1, the canonical pick when x gives no preference."""
    return {i: chosen_primitive.get(i, 1) for i in inst.robots}

