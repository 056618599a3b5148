"""Exact optima by enumeration, and the simple centralized baselines the distributed solvers are compared with.

For a fixed choice of primitives the best target ownership gives each target to its best observer, so the
WinnerTakesAll optimum only has to be searched over primitive choices, the same space as the Bottleneck optimum.
"""
import logging
from dataclasses import dataclass

from sata.constants import Limits
from sata.core import Assignment, Instance, induced_assignment
from sata.enumeration import maximize_over_choices
from sata.local_solver import round_solution
from sata.lp_kernel import centralized_lp
from sata.seeding import Seed, as_generator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OracleResult:
    best_assignment: Assignment
    optimum: float
    enumerated: int


def _brute_force(inst: Instance, objective: str, cap: int, n_jobs: int) -> OracleResult:
    blocks = [inst.robot_block(i) for i in inst.robots]
    result = maximize_over_choices(blocks, objective, cap, n_jobs)
    chosen = {i: option + 1 for i, option in zip(inst.robots, result.choice)}
    assignment = induced_assignment(inst, chosen) if objective == 'wta' else Assignment(chosen)
    logger.debug("Enumerated %d assignments for the %s optimum %g.", result.enumerated, objective, result.value)
    return OracleResult(assignment, result.value, result.enumerated)


def brute_force_wta(inst: Instance, cap: int = Limits.ENUMERATION_CAP, n_jobs: int = 1) -> OracleResult:
    """WinnerTakesAll optimum; ties go to the lexicographically smallest choice of primitives."""
    return _brute_force(inst, 'wta', cap, n_jobs)


def brute_force_bottleneck(inst: Instance, cap: int = Limits.ENUMERATION_CAP, n_jobs: int = 1) -> OracleResult:
    return _brute_force(inst, 'bottleneck', cap, n_jobs)


def lp_round_baseline(inst: Instance, cap: int = Limits.LP_PRIMITIVE_CAP) -> Assignment:
    return round_solution(inst, centralized_lp(inst, cap))


def random_baseline(inst: Instance, seed: Seed) -> Assignment:
    """Each robot picks a primitive uniformly at random; targets go to their best observer."""
    rng = as_generator(seed, 'random-baseline')
    chosen = {i: int(rng.integers(1, inst.primitive_count(i) + 1)) for i in inst.robots}
    return induced_assignment(inst, chosen)
