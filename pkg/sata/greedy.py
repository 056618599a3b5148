"""Sequential greedy selection of motion primitives.

The WinnerTakesAll greedy lets robots choose one after another, each maximizing
w'(p_m^i) = sum_j max{w(t_j), c_{i,m}^j} given the best quality w(t_j) its predecessors already achieve on
every target. The same loop with a min-over-targets score is the Bottleneck greedy, which has no approximation
guarantee and is kept to reproduce that failure.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from sata.core import Assignment, Instance, InstanceDimensionError, InvalidOrderError, induced_assignment
from sata.netsim import Network, NodeProgram

logger = logging.getLogger(__name__)

TIE_BREAKS = ('lowest', 'adversarial')


@dataclass(frozen=True)
class GreedyStep:
    robot: int
    primitive: int
    marginal_values: Tuple[float, ...]
    coverage: Tuple[float, ...]


@dataclass
class GreedyTrace:
    order: Tuple[int, ...]
    per_step: List[GreedyStep] = field(default_factory=list)
    rounds_used: int = 0

    def to_dict(self) -> Dict:
        return {
            'order': list(self.order),
            'rounds_used': self.rounds_used,
            'per_step': [{'robot': step.robot,
                          'primitive': step.primitive,
                          'marginal_values': list(step.marginal_values),
                          'coverage': list(step.coverage)} for step in self.per_step],
        }


def _validate_order(robots: Iterable[int], order: Optional[Sequence[int]]) -> Tuple[int, ...]:
    robots = tuple(robots)
    if order is None:
        return robots
    order = tuple(int(robot) for robot in order)
    if sorted(order) != sorted(robots):
        raise InvalidOrderError(f"Order {order} is not a permutation of robots {robots}.")
    return order


def _marginal_values(block: np.ndarray, coverage: np.ndarray) -> np.ndarray:
    # Targets the robot cannot see add max{w, 0} = w to every primitive alike.
    return np.maximum(block, coverage).sum(axis=1)


def greedy_wta(inst: Instance, order: Optional[Sequence[int]] = None) -> Tuple[Assignment, GreedyTrace]:
    """Runs the WinnerTakesAll greedy over all robots in the given order (ascending ids by default).

    Ties between primitives go to the lowest primitive index; each target is then owned by the robot whose
    selected primitive observes it best, ties to the lowest robot id.
    """
    order = _validate_order(inst.robots, order)
    coverage = np.zeros(inst.target_count)
    chosen = {}
    trace = GreedyTrace(order, [], len(order))
    for robot in order:
        block = inst.robot_block(robot)
        marginal = _marginal_values(block, coverage)
        primitive = int(np.argmax(marginal)) + 1
        coverage = np.maximum(coverage, block[primitive - 1])
        chosen[robot] = primitive
        trace.per_step.append(GreedyStep(robot, primitive, tuple(marginal.tolist()), tuple(coverage.tolist())))
    return induced_assignment(inst, chosen), trace


def greedy_bottleneck(inst: Instance, order: Optional[Sequence[int]] = None, tie_break: str = 'lowest') -> Assignment:
    """Greedy on the min-over-targets objective: each robot maximizes the current bottleneck given its predecessors.

    'adversarial' resolves ties toward the highest primitive index.
    """
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"tie_break must be one of {TIE_BREAKS}, got {tie_break!r}.")
    order = _validate_order(inst.robots, order)
    coverage = np.zeros(inst.target_count)
    chosen = {}
    for robot in order:
        block = inst.robot_block(robot)
        if inst.target_count:
            scores = (coverage + block).min(axis=1)
        else:
            scores = np.zeros(len(block))
        tied = np.flatnonzero(scores == scores.max())
        primitive = int(tied[0] if tie_break == 'lowest' else tied[-1]) + 1
        coverage = coverage + block[primitive - 1]
        chosen[robot] = primitive
    return Assignment(chosen)


class _GreedyProgram(NodeProgram):
    """One robot's part of the distributed greedy: wait for its turn, choose, broadcast the updated w vector."""
    position: int
    choice: Optional[int]

    def __init__(self, robot: int, position: int, neighbors: Tuple[int, ...], block: np.ndarray):
        super().__init__(robot)
        self.position = position
        self._neighbors = neighbors
        self._block = block
        self._known = np.zeros(block.shape[1])
        self.choice = None

    @property
    def halted(self) -> bool:
        return self.choice is not None

    def send(self, round_index):
        if round_index != self.position:
            return {}
        self.choice = int(np.argmax(_marginal_values(self._block, self._known))) + 1
        self._known = np.maximum(self._known, self._block[self.choice - 1])
        payload = self._known.astype('<f8').tobytes()
        return {neighbor: payload for neighbor in self._neighbors}

    def receive(self, round_index, inbox):
        if self.halted:
            return
        # w is monotone, so the freshest information on every target is the largest value heard.
        for payload in inbox.values():
            self._known = np.maximum(self._known, np.frombuffer(payload, dtype='<f8'))


def greedy_distributed(inst: Instance, network: Network) -> Tuple[Assignment, int]:
    """Runs the greedy concurrently in every connected component of the network.

    Within a component robots take turns by ascending id, the k-th robot choosing in round k and broadcasting its
    updated w vector to its neighbors, so the run takes as many rounds as the largest component has robots.
    The result equals greedy_wta with ascending ids.
    """
    if network.graph.robot_count != inst.robot_count:
        raise InstanceDimensionError(f"The network has {network.graph.robot_count} robots, the instance {inst.robot_count}.")
    programs = {}
    for component in network.components():
        for position, robot in enumerate(component, start=1):
            programs[robot] = _GreedyProgram(robot, position, network.graph.neighbors(robot), inst.robot_block(robot))
    log = network.run(programs)
    chosen = {robot: program.choice for robot, program in programs.items()}
    logger.debug("Distributed greedy finished in %d rounds over %d components.", log.rounds, len(log.components))
    return induced_assignment(inst, chosen), log.rounds
