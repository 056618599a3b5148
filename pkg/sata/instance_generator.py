"""Seeded random sensing graphs for the solver benchmarks.

Construction, in order:
    (a) every primitive observes one random target;
    (b) every target that is still unobserved gets one random primitive;
    (c) while the induced communication graph has several components, a target observed in the first component
        is joined to a random primitive of the second;
    (d) random absent primitive-target pairs are added until the coverage density reaches the requested phi.

The density phi is the percentage of primitive-target pairs that are sensing edges. One edge moves it by
100 / (total primitives * targets), the edge quantum.
"""
import logging
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Tuple

import numpy as np

from sata.core import Instance, SATAError, WeightKey, derive_comm_graph
from sata.netsim import components
from sata.seeding import make_rng

logger = logging.getLogger(__name__)

WEIGHT_MODES = ('binary', 'uniform')


class UnachievableDensityError(SATAError, ValueError):
    """The requested phi lies outside what the construction can produce."""


class DensityOvershootWarning(UserWarning):
    """The mandatory edges alone already exceed the requested phi by more than one edge quantum."""


@dataclass(frozen=True)
class GenConfig:
    robot_count: int
    target_count: int
    phi_percent: float
    primitives_per_robot: int = 2
    weight_mode: str = 'binary'
    seed: int = 0
    strict_phi: bool = True

    def __post_init__(self):
        if self.robot_count < 1 or self.target_count < 1 or self.primitives_per_robot < 1:
            raise ValueError("robot_count, target_count and primitives_per_robot must be positive.")
        if not 0 < self.phi_percent <= 100:
            raise ValueError(f"phi_percent must lie in (0, 100], got {self.phi_percent}.")
        if self.weight_mode not in WEIGHT_MODES:
            raise ValueError(f"weight_mode must be one of {WEIGHT_MODES}, got {self.weight_mode!r}.")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}.")

    @property
    def total_primitives(self) -> int:
        return self.robot_count * self.primitives_per_robot

    @property
    def pair_count(self) -> int:
        return self.total_primitives * self.target_count

    @property
    def edge_quantum(self) -> float:
        return 100.0 / self.pair_count

    @property
    def required_edges(self) -> int:
        # Smallest edge count whose density reaches phi; the epsilon absorbs float noise in phi * pairs / 100.
        return min(self.pair_count, math.ceil(self.phi_percent * self.pair_count / 100.0 - 1e-9))


def _instance(config: GenConfig, edges: Dict[WeightKey, float]) -> Instance:
    return Instance(config.robot_count, (config.primitives_per_robot,) * config.robot_count, config.target_count, edges)


def generate(config: GenConfig) -> Instance:
    """Builds a connected random instance whose density is the first edge count at or above phi_percent."""
    floor = max(config.total_primitives, config.target_count)
    required = config.required_edges
    if required < floor:
        if config.strict_phi:
            raise UnachievableDensityError(
                f"phi = {config.phi_percent}% needs {required} edges, but every primitive and target needs one: at least {floor}.")
        logger.info("Raising phi from %g%% to the construction floor of %d edges.", config.phi_percent, floor)

    rng = make_rng(config.seed, 'instance-gen')
    keys = [(i, m) for i in range(1, config.robot_count + 1) for m in range(1, config.primitives_per_robot + 1)]

    def weight() -> float:
        return 1.0 if config.weight_mode == 'binary' else float(1.0 - rng.random())

    edges = {}
    for i, m in keys:
        edges[(i, m, int(rng.integers(1, config.target_count + 1)))] = weight()
    observed = {j for _, _, j in edges}
    for j in range(1, config.target_count + 1):
        if j not in observed:
            i, m = keys[int(rng.integers(len(keys)))]
            edges[(i, m, j)] = weight()

    parts = components(derive_comm_graph(_instance(config, edges)))
    while len(parts) > 1:
        first, second = set(parts[0]), parts[1]
        candidates = sorted({j for i, _, j in edges if i in first})
        j = candidates[int(rng.integers(len(candidates)))]
        i = second[int(rng.integers(len(second)))]
        m = int(rng.integers(1, config.primitives_per_robot + 1))
        edges[(i, m, j)] = weight()
        parts = components(derive_comm_graph(_instance(config, edges)))

    missing = required - len(edges)
    if missing > 0:
        absent = [(i, m, j) for i, m in keys for j in range(1, config.target_count + 1) if (i, m, j) not in edges]
        for index in sorted(rng.choice(len(absent), size=missing, replace=False)):
            edges[absent[index]] = weight()

    inst = _instance(config, edges)
    overshoot = measure_phi(inst) - config.phi_percent
    if overshoot > config.edge_quantum:
        warnings.warn(f"Generated phi is {measure_phi(inst):.3f}% for a requested {config.phi_percent}%: the construction needs "
                      f"{len(edges)} edges.", DensityOvershootWarning)
    logger.debug("Generated %d robots, %d targets, %d edges (phi %.3f%%).", config.robot_count, config.target_count, len(edges),
                 measure_phi(inst))
    return inst


def _edge_count(inst: Instance) -> int:
    return sum(1 for c in inst.weights.values() if c > 0)


def measure_phi(inst: Instance) -> float:
    if inst.target_count == 0:
        raise ValueError("Coverage density is undefined without targets.")
    return 100.0 * _edge_count(inst) / (inst.total_primitives * inst.target_count)


def phi_identities(inst: Instance) -> Tuple[Fraction, Fraction]:
    """Returns the density computed from the average target degree and from the edge count, as exact fractions."""
    if inst.target_count == 0:
        raise ValueError("Coverage density is undefined without targets.")
    degrees = (np.asarray(inst.coverage_matrix) > 0).sum(axis=0)
    average_degree = Fraction(int(degrees.sum()), inst.target_count)
    from_degree = average_degree / inst.total_primitives * 100
    from_edges = Fraction(_edge_count(inst), inst.total_primitives * inst.target_count) * 100
    return from_degree, from_edges
