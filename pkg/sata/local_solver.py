"""The local algorithm for the Bottleneck variant.

Each robot floods what it knows for h synchronous rounds, which leaves it holding the sensing subgraph of every
robot within h communication hops. It then solves the max-min LP restricted to that view, treating primitives
outside the view as contributing nothing, and keeps the x values of its own primitives. The number of rounds is h
regardless of how many robots there are.
"""
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from sata.constants import Columns, Limits, Tolerances
from sata.core import Assignment, FractionalSolution, Instance, InstanceDimensionError, complete_choice, eval_bottleneck
from sata.lp_kernel import MaxMinLP, solve_maxmin_lp
from sata.netsim import Network, NodeProgram

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LocalParams:
    h: int
    epsilon: float = 0.1
    cap: int = Limits.LP_PRIMITIVE_CAP

    def __post_init__(self):
        if int(self.h) != self.h or self.h < 0:
            raise ValueError(f"h must be a nonnegative integer, got {self.h}.")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}.")
        if self.cap < 1:
            raise ValueError(f"cap must be positive, got {self.cap}.")


@dataclass(frozen=True)
class LocalView:
    center: int
    horizon: int
    robots: Tuple[int, ...]
    subgraph: Optional[MaxMinLP]  # None when no target is visible from the view
    boundary_flags: Dict[int, bool] = field(default_factory=dict)
    realized_targets: Tuple[int, ...] = ()

    @property
    def targets(self) -> Tuple[int, ...]:
        return self.subgraph.targets if self.subgraph is not None else ()


@dataclass(frozen=True)
class TargetRealization:
    realizer: Dict[int, int]
    unrealized: FrozenSet[int]


def realize_targets(inst: Instance) -> TargetRealization:
    """Hands every covered target to the lowest-id robot that can observe it."""
    realizer = {j: robots[0] for j, robots in inst.covering_robots.items() if robots}
    return TargetRealization(realizer, frozenset(j for j in inst.targets if j not in realizer))


def instance_degrees(inst: Instance) -> Tuple[int, int]:
    """Returns (delta_R, delta_T): the most primitives of any robot and the most primitives covering any target."""
    delta_r = max(inst.primitives_per_robot)
    if inst.target_count == 0:
        return delta_r, 0
    return delta_r, int((inst.coverage_matrix > 0).sum(axis=0).max())


def _robot_record(inst: Instance, robot: int) -> Dict:
    edges = [[m, j, c] for (i, m, j), c in sorted(inst.weights.items()) if i == robot and c > 0]
    return {'robot': robot, 'primitive_count': inst.primitive_count(robot), 'edges': edges}


class _ViewGatheringProgram(NodeProgram):
    """Forwards newly learned robot records to every neighbor for exactly h rounds."""

    def __init__(self, robot: int, neighbors: Tuple[int, ...], record: Dict, horizon: int):
        super().__init__(robot)
        self._neighbors = neighbors
        self._horizon = horizon
        self._rounds_sent = 0
        self.known = {robot: record}
        self._fresh = [record]

    @property
    def halted(self) -> bool:
        return self._rounds_sent >= self._horizon

    def send(self, round_index):
        self._rounds_sent += 1
        if not self._fresh:
            return {}
        payload = json.dumps(self._fresh, sort_keys=True).encode('utf-8')
        self._fresh = []
        return {neighbor: payload for neighbor in self._neighbors}

    def receive(self, round_index, inbox):
        for sender in sorted(inbox):
            for record in json.loads(inbox[sender].decode('utf-8')):
                if record['robot'] not in self.known:
                    self.known[record['robot']] = record
                    self._fresh.append(record)


def _view_from_records(center: int, horizon: int, known: Dict[int, Dict]) -> Tuple[Tuple[int, ...], Optional[MaxMinLP]]:
    robots = tuple(sorted(known))
    keys = tuple((i, m) for i in robots for m in range(1, known[i]['primitive_count'] + 1))
    weights = {(i, m, j): c for i in robots for m, j, c in known[i]['edges']}
    targets = tuple(sorted({j for _, _, j in weights}))
    if not targets:
        return robots, None
    columns = {j: k for k, j in enumerate(targets)}
    rows = {key: k for k, key in enumerate(keys)}
    coverage = np.zeros((len(keys), len(targets)))
    for (i, m, j), c in weights.items():
        coverage[rows[(i, m)], columns[j]] = c
    return robots, MaxMinLP(robots, keys, targets, coverage)


def gather_views(inst: Instance, params: LocalParams, network: Network) -> Tuple[Dict[int, LocalView], int]:
    """Runs h rounds of flooding and builds every robot's view from the records it collected."""
    if network.graph.robot_count != inst.robot_count:
        raise InstanceDimensionError(f"The network has {network.graph.robot_count} robots, the instance {inst.robot_count}.")
    programs = {robot: _ViewGatheringProgram(robot, network.graph.neighbors(robot), _robot_record(inst, robot), params.h)
                for robot in inst.robots}
    log = network.run(programs)

    realization = realize_targets(inst)
    views = {}
    for robot, program in programs.items():
        robots, subgraph = _view_from_records(robot, params.h, program.known)
        members = set(robots)
        targets = subgraph.targets if subgraph is not None else ()
        boundary = {j: not members.issuperset(inst.covering_robots[j]) for j in targets}
        realized = tuple(j for j in targets if realization.realizer.get(j) == robot)
        views[robot] = LocalView(robot, params.h, robots, subgraph, boundary, realized)
    logger.debug("Gathered %d views with h = %d in %d rounds (%d bytes).", len(views), params.h, log.rounds, log.total_bytes)
    return views, log.rounds


def _solve_view(view: LocalView, primitive_count: int, cap: int) -> Dict[Tuple[int, int], float]:
    own = [(view.center, m) for m in range(1, primitive_count + 1)]
    if view.subgraph is None:
        return {key: 0.0 for key in own}
    solution = solve_maxmin_lp(view.subgraph, cap)
    return {key: solution.x[key] for key in own}


def solve_local(inst: Instance, params: LocalParams, network: Network, n_jobs: int = 1) -> Tuple[FractionalSolution, int]:
    """Solves every robot's view and assembles the robots' own x values into one fractional solution.

    Views are independent, so with n_jobs != 1 they are solved by joblib workers between the gathering rounds
    and the assembly. The reported w is the true bottleneck of the assembled x on the whole instance.
    """
    views, rounds = gather_views(inst, params, network)
    ordered = [views[robot] for robot in inst.robots]
    if n_jobs == 1:
        pieces = [_solve_view(view, inst.primitive_count(view.center), params.cap) for view in ordered]
    else:
        pieces = Parallel(n_jobs=n_jobs)(delayed(_solve_view)(view, inst.primitive_count(view.center), params.cap) for view in ordered)

    x = {}
    for piece in pieces:
        x.update(piece)
    w = eval_bottleneck(inst, FractionalSolution(x, 0.0))
    return FractionalSolution(x, w), rounds


def round_solution(inst: Instance, frac: FractionalSolution) -> Assignment:
    """Sets each robot's largest x to one; near-ties and all-zero robots go to the lowest primitive index."""
    chosen = {}
    for robot in inst.robots:
        values = np.array([frac.x.get((robot, m), 0.0) for m in range(1, inst.primitive_count(robot) + 1)])
        if values.max() > Tolerances.ROUNDING_TIE:
            chosen[robot] = int(np.flatnonzero(values >= values.max() - Tolerances.ROUNDING_TIE)[0]) + 1
    return Assignment(complete_choice(inst, chosen))


def fractional_frame(inst: Instance, frac: FractionalSolution, rounded: Optional[Assignment] = None) -> pd.DataFrame:
    """One row per primitive with its x value and whether rounding selects it."""
    rounded = rounded or round_solution(inst, frac)
    rows: List[list] = [[i, m, frac.x.get((i, m), 0.0), rounded.chosen_primitive[i] == m] for i, m in inst.primitive_keys]
    return pd.DataFrame(rows, columns=Columns.FRACTIONAL)
