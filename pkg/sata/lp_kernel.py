"""Exact solver for the max-min linear program of the Bottleneck variant on small dense subproblems.

    maximize w
    subject to  sum_{i,m} c_{i,m}^j x_m^i >= w    for every target j
                sum_m x_m^i <= 1                  for every robot i
                x >= 0

The program is solved with a dense two-phase tableau simplex using Bland's rule, which never cycles. Problems
are tiny (h-hop views of a sensing graph), so the tableau is rebuilt per call and everything stays in numpy.
"""
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from sata.constants import Limits, Tolerances
from sata.core import VACUOUS, FractionalSolution, Instance, PrimitiveKey, SATAError
from sata.enumeration import maximize_over_choices

logger = logging.getLogger(__name__)


class LPError(SATAError):
    """Base class for failures of the LP kernel."""


class ProblemTooLargeError(LPError, ValueError):
    pass


class DegenerateProblemError(LPError, ValueError):
    """Weights span too many orders of magnitude for the dense tableau."""


class EmptyCoverageError(LPError, ValueError):
    """A target has no positive-weight primitive; callers must filter such targets out first."""


class InfeasibleLPError(LPError):
    pass


class UnboundedLPError(LPError):
    pass


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int):
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    basis[row] = col


def _optimize(tableau: np.ndarray, basis: np.ndarray, cost: np.ndarray, allowed: np.ndarray, max_pivots: int):
    """Maximizes cost . z over the tableau in place, entering the lowest improving column (Bland's rule)."""
    variables = len(cost)
    for _ in range(max_pivots):
        reduced = cost - cost[basis] @ tableau[:, :variables]
        candidates = np.flatnonzero((reduced > Tolerances.FEASIBILITY) & allowed)
        if not candidates.size:
            return
        col = int(candidates[0])
        column = tableau[:, col]
        positive = column > Tolerances.PIVOT
        if not positive.any():
            raise UnboundedLPError(f"Column {col} improves the objective without bound.")
        ratios = np.full(len(column), math.inf)
        ratios[positive] = tableau[positive, -1] / column[positive]
        best = ratios.min()
        tied = np.flatnonzero(ratios <= best + Tolerances.PIVOT * (1.0 + abs(best)))
        row = int(tied[np.argmin(basis[tied])])
        _pivot(tableau, basis, row, col)
    raise LPError(f"Simplex did not terminate within {max_pivots} pivots.")


def simplex_maximize(c, A_ub, b_ub, max_pivots: int = Limits.SIMPLEX_MAX_PIVOTS) -> Tuple[np.ndarray, float]:
    """Solves max c.z subject to A_ub z <= b_ub, z >= 0.

    Rows with a negative right-hand side are negated and given an artificial variable; phase one then drives the
    artificials to zero before phase two optimizes c.

    Returns:
        z, c.z
    """
    c = np.asarray(c, dtype=float)
    A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.asarray(b_ub, dtype=float)
    rows, n = A_ub.shape
    if len(c) != n or len(b_ub) != rows:
        raise ValueError(f"Shapes do not match: c has {len(c)} entries, A_ub is {A_ub.shape}, b_ub has {len(b_ub)}.")

    flipped = np.flatnonzero(b_ub < 0)
    artificial_count = len(flipped)
    variables = n + rows + artificial_count
    tableau = np.zeros((rows, variables + 1))
    tableau[:, :n] = A_ub
    tableau[:, n:n + rows] = np.eye(rows)
    tableau[:, -1] = b_ub
    basis = np.arange(n, n + rows)
    for k, row in enumerate(flipped):
        tableau[row] *= -1.0
        tableau[row, n + rows + k] = 1.0
        basis[row] = n + rows + k

    is_artificial = np.zeros(variables, dtype=bool)
    is_artificial[n + rows:] = True

    if artificial_count:
        phase_one = np.where(is_artificial, -1.0, 0.0)
        _optimize(tableau, basis, phase_one, np.ones(variables, dtype=bool), max_pivots)
        if phase_one[basis] @ tableau[:, -1] < -Tolerances.FEASIBILITY:
            raise InfeasibleLPError("No z >= 0 satisfies A_ub z <= b_ub.")
        # Artificials still basic sit at zero: swap them for any real column, or drop the redundant row.
        keep = np.ones(len(basis), dtype=bool)
        for row in range(len(basis)):
            if not is_artificial[basis[row]]:
                continue
            replacements = np.flatnonzero((np.abs(tableau[row, :variables]) > Tolerances.PIVOT) & ~is_artificial)
            if replacements.size:
                _pivot(tableau, basis, row, int(replacements[0]))
            else:
                keep[row] = False
        tableau, basis = tableau[keep], basis[keep]

    phase_two = np.zeros(variables)
    phase_two[:n] = c
    _optimize(tableau, basis, phase_two, ~is_artificial, max_pivots)

    z = np.zeros(n)
    for row, variable in enumerate(basis):
        if variable < n:
            z[variable] = tableau[row, -1]
    return z, float(c @ z)


@dataclass(frozen=True, eq=False)
class MaxMinLP:
    """The max-min program restricted to a set of robots, their primitives and a set of targets."""
    robots: Tuple[int, ...]
    primitive_keys: Tuple[PrimitiveKey, ...]
    targets: Tuple[int, ...]
    coverage: np.ndarray

    def __post_init__(self):
        coverage = np.asarray(self.coverage, dtype=float)
        object.__setattr__(self, 'coverage', coverage)
        if coverage.shape != (len(self.primitive_keys), len(self.targets)):
            raise ValueError(f"Coverage has shape {coverage.shape} for {len(self.primitive_keys)} primitives and {len(self.targets)} targets.")
        if (coverage < 0).any() or not np.isfinite(coverage).all():
            raise ValueError("Coverage weights must be finite and nonnegative.")
        robots = set(self.robots)
        stray = [key for key in self.primitive_keys if key[0] not in robots]
        if stray:
            raise ValueError(f"Primitives {stray} belong to robots outside {self.robots}.")
        empty = [target for target, column in zip(self.targets, coverage.T) if not (column > 0).any()]
        if empty:
            raise EmptyCoverageError(f"Targets {empty} have no positive-weight primitive.")

    @classmethod
    def from_instance(cls, inst: Instance, robots: Optional[Iterable[int]] = None, targets: Optional[Iterable[int]] = None) -> 'MaxMinLP':
        """Restricts an instance to robots (all by default) and targets (by default every target they cover)."""
        robots = tuple(sorted(robots)) if robots is not None else tuple(inst.robots)
        keys = tuple((i, m) for i in robots for m in range(1, inst.primitive_count(i) + 1))
        rows = inst.coverage_matrix[[inst.row(i, m) for i, m in keys]]
        if targets is None:
            targets = tuple(j for j in inst.targets if (rows[:, j - 1] > 0).any())
        else:
            targets = tuple(sorted(targets))
        return cls(robots, keys, targets, rows[:, [j - 1 for j in targets]])


def _undominated_rows(problem: MaxMinLP) -> np.ndarray:
    """Row indices worth solving for: nonzero rows that no other primitive of the same robot covers at least as well.

    Of identical rows only the lowest index survives. Moving a dropped primitive's mass onto a row that dominates
    it never lowers any target's coverage, so the optimum is unchanged.
    """
    coverage = problem.coverage
    owners = np.array([robot for robot, _ in problem.primitive_keys])
    keep = np.zeros(len(owners), dtype=bool)
    for robot in problem.robots:
        rows = np.flatnonzero(owners == robot)
        block = coverage[rows]
        at_least = (block[:, None, :] >= block[None, :, :]).all(axis=2)
        strictly = (block[:, None, :] > block[None, :, :]).any(axis=2)
        earlier = np.arange(len(rows))[:, None] < np.arange(len(rows))[None, :]
        beaten = at_least & (earlier | strictly)
        np.fill_diagonal(beaten, False)
        keep[rows] = (block > 0).any(axis=1) & ~beaten.any(axis=0)
    return np.flatnonzero(keep)


def solve_maxmin_lp(problem: MaxMinLP, cap: int = Limits.LP_PRIMITIVE_CAP) -> FractionalSolution:
    """Returns an optimal (x, w); w is recomputed as min_j sum c x so it matches x exactly.

    Only undominated primitives enter the tableau and count against cap; every other primitive gets x = 0.
    """
    target_count = len(problem.targets)
    if target_count == 0:
        if len(problem.primitive_keys) > cap:
            raise ProblemTooLargeError(f"The problem has {len(problem.primitive_keys)} primitives; the kernel accepts at most {cap}.")
        return FractionalSolution({key: 0.0 for key in problem.primitive_keys}, VACUOUS)
    active = _undominated_rows(problem)
    primitive_count = len(active)
    if primitive_count > cap:
        raise ProblemTooLargeError(f"The problem has {primitive_count} undominated primitives; the kernel accepts at most {cap}.")
    positive = problem.coverage[problem.coverage > 0]
    if positive.max() / positive.min() > Tolerances.WEIGHT_DYNAMIC_RANGE:
        raise DegenerateProblemError(f"Weights range from {positive.min()} to {positive.max()}.")

    # Normalizing by the largest weight keeps the tableau entries near 1; x is unaffected.
    scale = positive.max()
    coverage = problem.coverage[active] / scale
    robot_rows = {robot: k for k, robot in enumerate(problem.robots)}

    A_ub = np.zeros((target_count + len(problem.robots), primitive_count + 1))
    A_ub[:target_count, :primitive_count] = -coverage.T
    A_ub[:target_count, -1] = 1.0
    for column, row in enumerate(active):
        A_ub[target_count + robot_rows[problem.primitive_keys[row][0]], column] = 1.0
    b_ub = np.concatenate([np.zeros(target_count), np.ones(len(problem.robots))])
    c = np.zeros(primitive_count + 1)
    c[-1] = 1.0

    z, _ = simplex_maximize(c, A_ub, b_ub)
    x = np.zeros(len(problem.primitive_keys))
    x[active] = np.clip(z[:primitive_count], 0.0, None)
    w = float((problem.coverage.T @ x).min())
    logger.debug("Solved max-min LP with %d of %d primitives and %d targets: w = %g.", primitive_count, len(x), target_count, w)
    return FractionalSolution({key: float(value) for key, value in zip(problem.primitive_keys, x)}, w)


def centralized_lp(inst: Instance, cap: int = Limits.LP_PRIMITIVE_CAP) -> FractionalSolution:
    """Solves the relaxation on the whole instance.

    Uncovered targets are left out of the kernel call but pin the reported w to 0, which is what any x achieves
    on them; an instance without targets is vacuous.
    """
    if inst.target_count == 0:
        return FractionalSolution({key: 0.0 for key in inst.primitive_keys}, VACUOUS)
    covered = inst.covered_targets
    if not covered:
        return FractionalSolution({key: 0.0 for key in inst.primitive_keys}, 0.0)
    solution = solve_maxmin_lp(MaxMinLP.from_instance(inst, inst.robots, covered), cap)
    if len(covered) < inst.target_count:
        return FractionalSolution(solution.x, 0.0)
    return solution


@dataclass(frozen=True)
class EquivalenceReport:
    integer_lp_value: float
    bottleneck_optimum: float
    passed: bool
    tolerance: float = Tolerances.EQUIVALENCE


def check_lemma1_equivalence(inst: Instance, cap: int = Limits.ENUMERATION_CAP) -> EquivalenceReport:
    """Compares the integer-constrained max-min program with the Bottleneck optimum over one-primitive choices.

    The integer program allows a robot to select nothing, so it is enumerated with an extra all-zero option per
    robot; the cap applies to that larger enumeration.
    """
    blocks = [inst.robot_block(i) for i in inst.robots]
    with_idle = [np.vstack([np.zeros((1, inst.target_count)), block]) for block in blocks]
    integer_lp = maximize_over_choices(with_idle, 'bottleneck', cap).value
    optimum = maximize_over_choices(blocks, 'bottleneck', cap).value
    if math.isinf(integer_lp) and math.isinf(optimum):
        passed = True
    else:
        passed = abs(integer_lp - optimum) <= Tolerances.EQUIVALENCE
    return EquivalenceReport(integer_lp, optimum, passed)


def theorem1_ratio(delta_r: int, delta_t: int, h: int, epsilon: float) -> float:
    """The local algorithm's approximation factor delta_R (1 + eps)(1 + 1/h)(1 - 1/delta_T), reported next to measured ratios."""
    if h == 0:
        return math.inf
    if delta_t == 0:
        return math.nan
    return delta_r * (1.0 + epsilon) * (1.0 + 1.0 / h) * (1.0 - 1.0 / delta_t)
