"""Deterministic synchronous-round message passing over a communication graph.

Every round has two phases. First each running node program returns its outbox (neighbor -> payload bytes);
then, after all outboxes are collected, every program receives the messages addressed to it. A payload sent in
round k can therefore only influence what a program sends in round k + 1 or later.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import networkx as nx
import pandas as pd

from sata.constants import Columns, Limits
from sata.core import CommGraph, SATAError

logger = logging.getLogger(__name__)


class RoundLimitExceeded(SATAError, RuntimeError):
    """Programs were still running after max_rounds rounds. The partial log is attached."""

    def __init__(self, message: str, log: 'RoundLog'):
        super().__init__(message)
        self.log = log


class NonNeighborMessageError(SATAError, ValueError):
    """A program addressed a robot it shares no communication edge with."""


@dataclass(frozen=True)
class MessageRecord:
    sender: int
    receiver: int
    size: int


@dataclass
class RoundLog:
    rounds: int
    per_round: List[List[MessageRecord]] = field(default_factory=list)
    components: List[Tuple[int, ...]] = field(default_factory=list)

    @property
    def total_bytes(self) -> int:
        return sum(record.size for records in self.per_round for record in records)

    @property
    def message_count(self) -> int:
        return sum(len(records) for records in self.per_round)

    def to_frame(self) -> pd.DataFrame:
        rows = [[k, record.sender, record.receiver, record.size] for k, records in enumerate(self.per_round, start=1) for record in records]
        return pd.DataFrame(rows, columns=Columns.ROUND_LOG)


class NodeProgram(ABC):
    """A robot's deterministic behavior: a function of its own state and the messages it has received."""
    robot: int

    def __init__(self, robot: int):
        self.robot = robot

    @property
    @abstractmethod
    def halted(self) -> bool:
        ...

    @abstractmethod
    def send(self, round_index: int) -> Dict[int, bytes]:
        ...

    @abstractmethod
    def receive(self, round_index: int, inbox: Dict[int, bytes]):
        ...


def components(graph: CommGraph) -> List[Tuple[int, ...]]:
    """Connected components, each sorted, ordered by their smallest member."""
    parts = [tuple(sorted(nodes)) for nodes in nx.connected_components(graph.to_networkx())]
    return sorted(parts, key=lambda part: part[0])


def run_rounds(graph: CommGraph, programs: Mapping[int, NodeProgram], max_rounds: int = Limits.DEFAULT_MAX_ROUNDS) -> RoundLog:
    """Runs lock-step rounds until every program halts."""
    if set(programs) != set(graph.robots):
        raise ValueError(f"run_rounds needs exactly one program per robot 1..{graph.robot_count}.")

    log = RoundLog(0, [], components(graph))
    while not all(program.halted for program in programs.values()):
        if log.rounds >= max_rounds:
            raise RoundLimitExceeded(f"Programs did not halt within {max_rounds} rounds.", log)
        log.rounds += 1

        # Send phase.
        inboxes = {robot: {} for robot in programs}
        records = []
        for robot in sorted(programs):
            program = programs[robot]
            if program.halted:
                continue
            for receiver, payload in sorted(program.send(log.rounds).items()):
                if not graph.has_edge(robot, receiver):
                    raise NonNeighborMessageError(f"Robot {robot} sent to robot {receiver} without a communication edge.")
                if not isinstance(payload, bytes):
                    raise TypeError(f"Payloads must be bytes, robot {robot} sent {type(payload).__name__}.")
                inboxes[receiver][robot] = payload
                records.append(MessageRecord(robot, receiver, len(payload)))
        log.per_round.append(records)

        # Barrier, then delivery.
        for robot in sorted(programs):
            programs[robot].receive(log.rounds, inboxes[robot])
    logger.debug("Finished %d rounds, %d messages, %d bytes.", log.rounds, log.message_count, log.total_bytes)
    return log


class Network:
    """Handle through which the distributed solvers run their node programs; keeps every RoundLog."""
    graph: CommGraph
    max_rounds: int
    logs: List[RoundLog]

    def __init__(self, graph: CommGraph, max_rounds: int = Limits.DEFAULT_MAX_ROUNDS):
        self.graph = graph
        self.max_rounds = max_rounds
        self.logs = []

    def run(self, programs: Mapping[int, NodeProgram]) -> RoundLog:
        log = run_rounds(self.graph, programs, self.max_rounds)
        self.logs.append(log)
        return log

    @property
    def last_log(self) -> RoundLog:
        if not self.logs:
            raise ValueError("No program has been run on this network yet.")
        return self.logs[-1]

    def components(self) -> List[Tuple[int, ...]]:
        return components(self.graph)


class _FloodProgram(NodeProgram):
    _pending: List[int]
    _done: bool
    arrival: int

    def __init__(self, robot: int, neighbors: Tuple[int, ...], is_source: bool, reachable: bool):
        super().__init__(robot)
        self._neighbors = neighbors
        self._pending = list(neighbors) if is_source else []
        self._done = not reachable or (is_source and not neighbors)
        self.arrival = 0 if is_source else -1

    @property
    def halted(self) -> bool:
        return self._done

    def send(self, round_index):
        if not self._pending:
            return {}
        outbox = {neighbor: b"\x01" for neighbor in self._pending}
        self._pending = []
        self._done = True
        return outbox

    def receive(self, round_index, inbox):
        if self.arrival >= 0 or not inbox:
            return
        self.arrival = round_index
        self._pending = [neighbor for neighbor in self._neighbors if neighbor not in inbox]
        # Nothing left to forward to: this node is a leaf of the flood.
        self._done = not self._pending


def flood(graph: CommGraph, source: int, network: Optional[Network] = None) -> Tuple[Dict[int, int], RoundLog]:
    """Floods a one-byte token from source; returns the round in which each reachable robot first holds it."""
    network = network or Network(graph)
    reachable = set(nx.node_connected_component(graph.to_networkx(), source))
    programs = {robot: _FloodProgram(robot, graph.neighbors(robot), robot == source, robot in reachable) for robot in graph.robots}
    log = network.run(programs)
    return {robot: program.arrival for robot, program in programs.items() if program.arrival >= 0}, log


class _GatherScatterProgram(NodeProgram):

    def __init__(self, robot: int, leader: int, followers: Tuple[int, ...], payload: bytes, combine: Callable[[Dict[int, bytes]], bytes]):
        super().__init__(robot)
        self._leader = leader
        self._followers = followers
        self._payload = payload
        self._combine = combine
        self._gathered = {robot: payload} if robot == leader else {}
        self.result = None

    @property
    def halted(self) -> bool:
        return self.result is not None

    def send(self, round_index):
        if round_index == 1 and self.robot != self._leader:
            return {self._leader: self._payload}
        if round_index == 2 and self.robot == self._leader:
            self.result = self._combine(dict(sorted(self._gathered.items())))
            return {follower: self.result for follower in self._followers}
        return {}

    def receive(self, round_index, inbox):
        if self.robot == self._leader:
            self._gathered.update(inbox)
        elif round_index == 2:
            self.result = inbox[self._leader]


def gather_scatter(graph: CommGraph, payloads: Mapping[int, bytes], combine: Callable[[Dict[int, bytes]], bytes],
                   network: Optional[Network] = None) -> Tuple[Dict[int, bytes], RoundLog]:
    """Centralized-equivalent exchange: everyone sends to the lowest-id robot, which broadcasts combine(payloads).

    Needs the leader adjacent to every other robot, e.g. a complete graph; takes two rounds when there are
    at least two robots.
    """
    leader = min(graph.robots)
    followers = tuple(robot for robot in graph.robots if robot != leader)
    if any(not graph.has_edge(leader, follower) for follower in followers):
        raise ValueError("gather_scatter needs the lowest-id robot to neighbor every other robot.")
    network = network or Network(graph)
    programs = {robot: _GatherScatterProgram(robot, leader, followers, payloads[robot], combine) for robot in graph.robots}
    if not followers:
        programs[leader].result = combine({leader: payloads[leader]})
    log = network.run(programs)
    return {robot: program.result for robot, program in programs.items()}, log
