"""Tests the instance model, the communication graph and the objective evaluators."""
import itertools
import math
import os
from collections import Counter

import numpy as np
import pytest

from sata.core import (Assignment, CommGraph, FractionalSolution, Instance, InstanceDimensionError, MissingOwnershipError,
                       complete_choice, derive_comm_graph, eval_bottleneck, eval_wta, eval_wta_from_x, induced_assignment, is_vacuous,
                       target_coverage, validate_instance)
from sata.instance_generator import GenConfig, generate
from sata.oracle import random_baseline
from sata.serialization import load_instance

FIXTURE = os.path.join(os.path.dirname(__file__), '..', 'fixtures', 'appendix_c.json')


@pytest.fixture
def counterexample():
    return load_instance(FIXTURE)


def test_coverage_matrix_follows_primitive_keys(counterexample):
    assert counterexample.primitive_keys == [(1, 1), (1, 2), (2, 1), (2, 2)]
    np.testing.assert_array_equal(counterexample.coverage_matrix, [[1, 0], [0, 0], [0, 0], [0, 1]])
    np.testing.assert_array_equal(counterexample.robot_block(2), [[0, 0], [0, 1]])
    with pytest.raises(ValueError):
        counterexample.coverage_matrix[0, 0] = 5


def test_validate_instance_accepts_fixture(counterexample):
    assert validate_instance(counterexample).ok


def test_validate_instance_lists_every_violation():
    inst = Instance(2, (1, 1), 1, {(3, 1, 1): 1.0, (1, 2, 1): 1.0, (1, 1, 2): -1.0})
    report = validate_instance(inst)
    assert not report.ok
    # Target out of range and negative weight on the same edge count separately.
    assert len(report.violations) == 4
    assert any("primitive index" in violation for violation in report.violations)
    assert any("robot index" in violation for violation in report.violations)


def test_validate_instance_rejects_robot_without_primitives():
    report = validate_instance(Instance(2, (1, 0), 1, {}))
    assert len(report.violations) == 1


def test_derive_comm_graph_connects_robots_sharing_targets(counterexample):
    assert derive_comm_graph(counterexample).edges == frozenset()
    inst = Instance(3, (1, 1, 1), 2, {(1, 1, 1): 1.0, (3, 1, 1): 2.0, (2, 1, 2): 1.0})
    assert derive_comm_graph(inst).edges == frozenset({(1, 3)})


def test_zero_weights_do_not_connect_robots():
    inst = Instance(2, (1, 1), 1, {(1, 1, 1): 1.0, (2, 1, 1): 0.0})
    assert derive_comm_graph(inst).edges == frozenset()
    assert inst.covering_robots == {1: (1,)}


def test_objectives_on_fixture(counterexample):
    chosen = {1: 1, 2: 2}
    assert eval_bottleneck(counterexample, Assignment(chosen)) == 1.0
    with pytest.raises(MissingOwnershipError):
        eval_wta(counterexample, Assignment(chosen))
    assignment = induced_assignment(counterexample, chosen)
    assert assignment.target_owner == {1: 1, 2: 2}
    assert eval_wta(counterexample, assignment) == 2.0
    assert eval_bottleneck(counterexample, Assignment({1: 2, 2: 2})) == 0.0


def test_bottleneck_is_vacuous_without_targets():
    inst = Instance(1, (2,), 0, {})
    value = eval_bottleneck(inst, Assignment({1: 1}))
    assert math.isinf(value) and is_vacuous(value)
    assert eval_wta_from_x(inst, {1: 1}) == (0.0, {})


def test_wta_ties_go_to_lowest_robot_and_unseen_targets_stay_unowned():
    inst = Instance(3, (1, 1, 1), 2, {(2, 1, 1): 1.0, (3, 1, 1): 1.0})
    value, owners = eval_wta_from_x(inst, {1: 1, 2: 1, 3: 1})
    assert value == 1.0
    assert owners == {1: 2}


def test_wta_counts_each_target_once():
    inst = Instance(2, (1, 1), 1, {(1, 1, 1): 2.0, (2, 1, 1): 3.0})
    value, owners = eval_wta_from_x(inst, {1: 1, 2: 1})
    assert value == 3.0
    assert owners == {1: 2}
    # Fixed ownership is honored even when it is not the best observer.
    assert eval_wta(inst, Assignment({1: 1, 2: 1}, {1: 1})) == 2.0


def test_assignments_outside_the_instance_are_rejected(counterexample):
    with pytest.raises(InstanceDimensionError):
        eval_bottleneck(counterexample, Assignment({1: 3, 2: 1}))
    with pytest.raises(InstanceDimensionError):
        eval_wta(counterexample, Assignment({1: 1, 2: 1}, {3: 1}))
    with pytest.raises(InstanceDimensionError):
        eval_bottleneck(counterexample, FractionalSolution({(5, 1): 1.0}, 0.0))


def test_fractional_coverage_and_invariants(counterexample):
    fractional = FractionalSolution({(1, 1): 0.5, (1, 2): 0.5, (2, 2): 1.0}, 0.5)
    np.testing.assert_allclose(target_coverage(counterexample, fractional), [0.5, 1.0])
    assert eval_bottleneck(counterexample, fractional) == 0.5
    assert fractional.satisfies_invariants(counterexample)
    assert not FractionalSolution({(1, 1): 0.6, (1, 2): 0.5}, 0.0).satisfies_invariants(counterexample)
    assert not FractionalSolution({(1, 1): -0.1}, 0.0).satisfies_invariants(counterexample)


def test_complete_choice_fills_primitive_one(counterexample):
    assert complete_choice(counterexample, {2: 2}) == {1: 1, 2: 2}


def test_relabeled_moves_rows_with_robots():
    inst = Instance(2, (1, 3), 2, {(1, 1, 1): 1.0, (2, 3, 2): 4.0})
    swapped = inst.relabeled({1: 2, 2: 1})
    assert swapped.primitives_per_robot == (3, 1)
    assert swapped.weights == {(2, 1, 1): 1.0, (1, 3, 2): 4.0}
    assert inst.scaled(2.0).weights == {(1, 1, 1): 2.0, (2, 3, 2): 8.0}


def test_comm_graph_normalizes_and_validates_edges():
    graph = CommGraph(3, frozenset({(2, 1), (3, 2)}))
    assert graph.edges == frozenset({(1, 2), (2, 3)})
    assert graph.has_edge(2, 1)
    assert graph.neighbors(2) == (1, 3)
    assert graph.diameter() == 2
    assert graph.ball(1, 1) == (1, 2)
    assert graph.ball(1, 0) == (1,)
    with pytest.raises(ValueError):
        CommGraph(2, frozenset({(1, 1)}))
    with pytest.raises(InstanceDimensionError):
        CommGraph(2, frozenset({(1, 3)}))


def test_comm_graph_diameter_of_disconnected_and_complete_graphs():
    assert CommGraph(4).diameter() == 0
    assert CommGraph(4, frozenset({(1, 2), (3, 4)})).diameter() == 1
    complete = CommGraph.complete(4)
    assert len(complete.edges) == 6
    assert complete.diameter() == 1


@pytest.fixture
def small_instances():
    shapes = [(2, 3, 3), (3, 3, 3), (4, 3, 2), (4, 2, 3)]
    return [generate(GenConfig(robots, targets, 40, primitives, 'uniform', seed, strict_phi=False))
            for robots, targets, primitives in shapes for seed in range(3)]


def _choices(inst):
    ranges = [range(1, inst.primitive_count(i) + 1) for i in inst.robots]
    return [dict(zip(inst.robots, picks)) for picks in itertools.product(*ranges)]


def test_best_owner_value_matches_every_explicit_ownership(small_instances):
    for inst in small_instances:
        for chosen in _choices(inst):
            value, _ = eval_wta_from_x(inst, chosen)
            assert value == pytest.approx(eval_wta(inst, induced_assignment(inst, chosen)), abs=1e-12)
            owners = itertools.product(inst.robots, repeat=inst.target_count)
            best = max(eval_wta(inst, Assignment(chosen, dict(zip(inst.targets, owner)))) for owner in owners)
            assert value == pytest.approx(best, abs=1e-12)


@pytest.mark.parametrize('factor', [0.25, 2.0, 8.0])
def test_objectives_scale_linearly(small_instances, factor):
    for inst in small_instances:
        scaled = inst.scaled(factor)
        for chosen in _choices(inst):
            value, owners = eval_wta_from_x(inst, chosen)
            scaled_value, scaled_owners = eval_wta_from_x(scaled, chosen)
            assert scaled_value == pytest.approx(factor * value)
            assert scaled_owners == owners
            assignment = Assignment(chosen)
            assert eval_bottleneck(scaled, assignment) == pytest.approx(factor * eval_bottleneck(inst, assignment))


def test_random_baseline_outcomes_are_equally_likely():
    inst = Instance(3, (2, 2, 2), 1, {(1, 1, 1): 1.0})
    rng = np.random.default_rng(11)
    draws = 8000
    counts = Counter(tuple(sorted(random_baseline(inst, rng).chosen_primitive.items())) for _ in range(draws))
    assert len(counts) == 2 ** 3
    expected = draws / 8
    spread = math.sqrt(draws * (1 / 8) * (7 / 8))
    assert all(abs(count - expected) < 5 * spread for count in counts.values())
