"""Tests the tableau simplex against scipy's linprog and the max-min formulation built on it."""
import math
import os

import numpy as np
import pytest
from scipy.optimize import linprog

from sata.core import Instance, eval_bottleneck
from sata.instance_generator import GenConfig, generate
from sata.lp_kernel import (DegenerateProblemError, EmptyCoverageError, InfeasibleLPError, MaxMinLP, ProblemTooLargeError,
                            UnboundedLPError, centralized_lp, check_lemma1_equivalence, simplex_maximize, solve_maxmin_lp,
                            theorem1_ratio)
from sata.oracle import brute_force_bottleneck
from sata.serialization import load_instance

FIXTURE = os.path.join(os.path.dirname(__file__), '..', 'fixtures', 'appendix_c.json')


@pytest.fixture
def generated_instances():
    return [generate(GenConfig(robots, targets, 30, 2, 'uniform', seed, strict_phi=False))
            for robots, targets in ((2, 4), (3, 5), (4, 6)) for seed in range(8)]


def _linprog_maxmin(problem):
    """The same max-min program solved by scipy, for reference."""
    primitives, targets = problem.coverage.shape
    robots = {robot: k for k, robot in enumerate(problem.robots)}
    A_ub = np.zeros((targets + len(robots), primitives + 1))
    A_ub[:targets, :primitives] = -problem.coverage.T
    A_ub[:targets, -1] = 1.0
    for column, (robot, _) in enumerate(problem.primitive_keys):
        A_ub[targets + robots[robot], column] = 1.0
    b_ub = np.concatenate([np.zeros(targets), np.ones(len(robots))])
    c = np.zeros(primitives + 1)
    c[-1] = -1.0
    return -linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(0, None)] * (primitives + 1), method='highs').fun


def test_simplex_on_a_textbook_problem():
    z, value = simplex_maximize([3, 2], [[1, 1], [1, 3], [1, 0]], [4, 6, 3])
    np.testing.assert_allclose(z, [3, 1])
    assert value == pytest.approx(11)


def test_simplex_runs_phase_one_for_negative_bounds():
    # x >= 1 written as -x <= -1.
    z, value = simplex_maximize([1, 1], [[-1, 0], [1, 1], [0, 1]], [-1, 3, 1])
    assert value == pytest.approx(3)
    assert z[0] >= 1 - 1e-9


def test_simplex_detects_infeasible_and_unbounded_problems():
    with pytest.raises(InfeasibleLPError):
        simplex_maximize([1], [[1], [-1]], [1, -2])
    with pytest.raises(UnboundedLPError):
        simplex_maximize([1, 0], [[0, 1]], [1])


@pytest.mark.parametrize('seed', range(10))
def test_simplex_agrees_with_linprog(seed):
    rng = np.random.default_rng(seed)
    A_ub = rng.uniform(0.1, 1.0, size=(5, 4))
    b_ub = rng.uniform(1.0, 2.0, size=5)
    c = rng.uniform(0.0, 1.0, size=4)
    z, value = simplex_maximize(c, A_ub, b_ub)
    reference = linprog(-c, A_ub=A_ub, b_ub=b_ub, bounds=[(0, None)] * 4, method='highs')
    assert value == pytest.approx(-reference.fun, abs=1e-8)
    assert (A_ub @ z <= b_ub + 1e-9).all()
    assert (z >= -1e-12).all()


def test_maxmin_single_target_shared_by_both_primitives():
    problem = MaxMinLP((1,), ((1, 1), (1, 2)), (1,), np.array([[1.0], [1.0]]))
    solution = solve_maxmin_lp(problem)
    assert solution.w == pytest.approx(1.0)
    assert solution.robot_mass(1) == pytest.approx(1.0)


def test_maxmin_splits_evenly_between_two_targets():
    problem = MaxMinLP((1,), ((1, 1), (1, 2)), (1, 2), np.eye(2))
    solution = solve_maxmin_lp(problem)
    assert solution.w == pytest.approx(0.5)
    assert solution.x[(1, 1)] == pytest.approx(0.5)
    assert solution.x[(1, 2)] == pytest.approx(0.5)


def test_maxmin_rejects_bad_problems():
    with pytest.raises(EmptyCoverageError):
        MaxMinLP((1,), ((1, 1),), (1, 2), np.array([[1.0, 0.0]]))
    with pytest.raises(ValueError):
        MaxMinLP((1,), ((2, 1),), (1,), np.array([[1.0]]))
    with pytest.raises(ProblemTooLargeError):
        solve_maxmin_lp(MaxMinLP((1,), ((1, 1), (1, 2)), (1, 2), np.eye(2)), cap=1)
    with pytest.raises(DegenerateProblemError):
        solve_maxmin_lp(MaxMinLP((1,), ((1, 1), (1, 2)), (1, 2), np.array([[1.0, 0.0], [0.0, 1e13]])))


def test_dominated_primitives_are_dropped_before_the_cap():
    rng = np.random.default_rng(5)
    keys = tuple((i, m) for i in range(1, 11) for m in range(1, 22))
    coverage = rng.integers(0, 2, size=(len(keys), 5)).astype(float)
    coverage[0] = 1.0
    problem = MaxMinLP(tuple(range(1, 11)), keys, tuple(range(1, 6)), coverage)
    solution = solve_maxmin_lp(problem)
    assert solution.w == pytest.approx(_linprog_maxmin(problem), abs=1e-8)
    # Robot 1's first primitive sees everything, so the rest of its library is dominated.
    assert solution.x[(1, 1)] == pytest.approx(1.0)
    assert all(solution.x[(1, m)] == 0.0 for m in range(2, 22))
    for robot in problem.robots:
        assert solution.robot_mass(robot) <= 1 + 1e-9


def test_identical_primitives_keep_the_lowest_index():
    problem = MaxMinLP((1,), ((1, 1), (1, 2), (1, 3)), (1,), np.array([[0.0], [1.0], [1.0]]))
    solution = solve_maxmin_lp(problem, cap=1)
    assert solution.x == {(1, 1): 0.0, (1, 2): pytest.approx(1.0), (1, 3): 0.0}
    assert solution.w == pytest.approx(1.0)


def test_duplicated_targets_leave_the_optimum_unchanged(generated_instances):
    for inst in generated_instances[:6]:
        problem = MaxMinLP.from_instance(inst)
        doubled = MaxMinLP(problem.robots, problem.primitive_keys, problem.targets + tuple(j + 100 for j in problem.targets),
                           np.hstack([problem.coverage, problem.coverage]))
        assert solve_maxmin_lp(doubled).w == pytest.approx(solve_maxmin_lp(problem).w, abs=1e-8)


def test_maxmin_matches_linprog_and_bounds_the_integer_optimum(generated_instances):
    for inst in generated_instances:
        problem = MaxMinLP.from_instance(inst)
        solution = solve_maxmin_lp(problem)
        assert solution.w == pytest.approx(_linprog_maxmin(problem), abs=1e-8)
        assert solution.satisfies_invariants(inst)
        assert solution.w == pytest.approx(eval_bottleneck(inst, solution), abs=1e-12)
        assert solution.w >= brute_force_bottleneck(inst).optimum - 1e-9


def test_centralized_lp_edge_cases():
    assert math.isinf(centralized_lp(Instance(1, (2,), 0, {})).w)
    uncovered = Instance(1, (2,), 2, {(1, 1, 1): 1.0})
    assert centralized_lp(uncovered).w == 0.0
    assert centralized_lp(Instance(1, (1,), 1, {})).w == 0.0
    assert centralized_lp(load_instance(FIXTURE)).w == pytest.approx(1.0)


def test_integer_equivalence_on_small_instances(generated_instances):
    report = check_lemma1_equivalence(load_instance(FIXTURE))
    assert report.passed
    assert report.integer_lp_value == report.bottleneck_optimum == 1.0

    single = check_lemma1_equivalence(Instance(1, (1,), 1, {(1, 1, 1): 2.0}))
    assert single.integer_lp_value == single.bottleneck_optimum == 2.0

    assert all(check_lemma1_equivalence(inst).passed for inst in generated_instances)


def test_integer_equivalence_without_targets_is_vacuous():
    report = check_lemma1_equivalence(Instance(2, (2, 2), 0, {}))
    assert report.passed
    assert math.isinf(report.integer_lp_value)


def test_theorem1_ratio():
    assert math.isinf(theorem1_ratio(2, 3, 0, 0.1))
    assert theorem1_ratio(2, 2, 1, 0.0) == pytest.approx(2.0)
    assert theorem1_ratio(2, 4, 2, 0.5) == pytest.approx(2 * 1.5 * 1.5 * 0.75)
