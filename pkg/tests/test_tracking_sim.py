"""Tests the planar tracking simulator: presets, motion, primitives, snapshots, policies and episodes."""
import json
import math

import numpy as np
import pandas as pd
import pytest

from sata.constants import Columns
from sata.tracking_sim import (CommunicationAssumptionWarning, PrimitiveStateSet, SimConfig, WorldState, available_presets,
                               build_primitives, comm_graph_from_positions, compare_single_step, count_assumption_violations,
                               histogram_table, init_world, load_sim_config, measure_actual, parker_policy, preferred_displacement,
                               rank_primitives, run_episode, snapshot_instance, step_targets, summarize_episode)
from sata.seeding import make_rng


@pytest.fixture
def small_config():
    return SimConfig(arena_size=20.0, robot_step=1.0, target_step=0.5, target_turn_period=5, sensing_range=4.0, comm_range=8.0,
                     fan_headings=8, steps=5, robot_count=3, target_count=6, seed=0)


def make_world(robot_xy, target_xy, target_heading=None, mobile=False, steps_since_turn=None):
    robot_xy = np.array(robot_xy, dtype=float)
    target_xy = np.array(target_xy, dtype=float).reshape(-1, 2)
    count = len(target_xy)
    return WorldState(0, robot_xy, np.zeros(len(robot_xy)), target_xy,
                      np.zeros(count) if target_heading is None else np.array(target_heading, dtype=float), target_xy.copy(),
                      np.zeros(count, dtype=int) if steps_since_turn is None else np.array(steps_since_turn),
                      np.full(count, mobile))


def test_presets_load_with_overrides():
    assert available_presets() == ['gazebo-like', 'local-demo', 'parker-cmp']
    for name in available_presets():
        assert isinstance(load_sim_config(name), SimConfig)
    config = load_sim_config('parker-cmp', steps=3, target_count=None)
    assert config.steps == 3
    assert config.target_count == 30
    assert config.sensing_range == 40.0


def test_unknown_config_keys_are_rejected(tmp_path):
    path = tmp_path / 'custom.json'
    path.write_text(json.dumps({'_notes': ['ignored'], 'arena': 10.0}))
    with pytest.raises(ValueError):
        load_sim_config(str(path))


@pytest.mark.parametrize('overrides', [
    dict(sensing_range=9.0),
    dict(library='grid'),
    dict(quality_mode='distance'),
    dict(moving_target_fraction=1.5),
    dict(target_turn_period=0),
    dict(robot_step=0.0),
])
def test_invalid_sim_configs_are_rejected(small_config, overrides):
    with pytest.raises(ValueError):
        small_config.with_overrides(**overrides)


def test_targets_move_straight_between_turns(small_config):
    world = make_world([[1.0, 1.0]], [[10.0, 10.0]], mobile=True)
    moved = step_targets(world, small_config, make_rng(0, 'test'))
    np.testing.assert_allclose(moved.target_xy, [[10.5, 10.0]])
    np.testing.assert_allclose(moved.target_prev_xy, [[10.0, 10.0]])
    assert moved.target_heading[0] == 0.0
    assert moved.steps_since_turn[0] == 1
    assert moved.step == 1


def test_targets_turn_at_the_end_of_the_period(small_config):
    world = make_world([[1.0, 1.0]], [[10.0, 10.0]], mobile=True, steps_since_turn=[4])
    moved = step_targets(world, small_config, make_rng(0, 'test'))
    np.testing.assert_allclose(moved.target_xy, [[10.5, 10.0]])
    assert moved.steps_since_turn[0] == 0
    assert moved.target_heading[0] != 0.0


def test_targets_turn_away_from_walls(small_config):
    world = make_world([[1.0, 1.0]], [[19.9, 10.0]], mobile=True)
    moved = step_targets(world, small_config, make_rng(3, 'test'))
    assert ((moved.target_xy >= 0) & (moved.target_xy <= 20.0)).all()
    assert np.linalg.norm(moved.target_xy[0] - world.target_xy[0]) == pytest.approx(0.5)
    assert moved.target_heading[0] != 0.0


def test_stationary_targets_stay_put(small_config):
    world = make_world([[1.0, 1.0]], [[19.9, 10.0]], mobile=False)
    moved = step_targets(world, small_config, make_rng(0, 'test'))
    np.testing.assert_array_equal(moved.target_xy, world.target_xy)


def test_initial_mobile_targets_have_a_linear_history(small_config):
    world = init_world(small_config.with_overrides(moving_target_fraction=0.5))
    assert world.mobile.sum() == 3
    steps = np.linalg.norm(world.target_xy - world.target_prev_xy, axis=1)
    np.testing.assert_allclose(steps[world.mobile], 0.5)
    np.testing.assert_allclose(steps[~world.mobile], 0.0)


def test_fan_library_has_stay_plus_evenly_spaced_headings():
    config = SimConfig(arena_size=30.0, robot_step=1.0, target_step=0.5, target_turn_period=25, sensing_range=5.0, comm_range=10.0,
                       robot_count=1, target_count=2)
    world = make_world([[15.0, 15.0]], [[17.0, 15.0], [25.0, 25.0]])
    primitives = build_primitives(world, config, make_rng(0, 'test'))
    poses = primitives.poses[0]
    assert poses.shape == (21, 3)
    np.testing.assert_allclose(poses[0], [15.0, 15.0, 0.0])
    np.testing.assert_allclose(np.linalg.norm(poses[1:, :2] - [15.0, 15.0], axis=1), 1.0)
    np.testing.assert_allclose(np.diff(poses[1:, 2]), 2 * math.pi / 20)
    assert primitives.candidates == [(1,)]


def test_random_heading_library_has_two_primitives(small_config):
    config = small_config.with_overrides(library='random-heading', robot_count=1)
    world = make_world([[10.0, 10.0]], [[11.0, 10.0]])
    poses = build_primitives(world, config, make_rng(0, 'test')).poses[0]
    assert poses.shape == (2, 3)
    length = np.linalg.norm(poses[1, :2] - [10.0, 10.0])
    assert 0 < length <= 1.0
    assert abs(poses[1, 2]) <= math.radians(30.0)


def test_snapshot_weights_against_predicted_positions(small_config):
    config = small_config.with_overrides(quality_mode='inverse-distance', robot_count=1, target_count=3)
    world = make_world([[5.0, 5.0]], [[7.0, 5.0], [5.0, 5.0], [6.0, 5.0]])
    poses = [np.array([[5.0, 5.0, 0.0], [7.0, 5.0, 0.0]])]
    inst = snapshot_instance(world, PrimitiveStateSet(poses, [(1, 2)]), config)
    assert inst.weights[(1, 1, 1)] == pytest.approx(0.5)
    assert inst.weights[(1, 1, 2)] == pytest.approx(10.0)
    assert inst.weights[(1, 2, 1)] == pytest.approx(10.0)
    # Target 3 is in range but not among the robot's current observations.
    assert all(j != 3 for _, _, j in inst.weights)


def test_snapshot_drops_targets_predicted_out_of_range(small_config):
    config = small_config.with_overrides(robot_count=1, target_count=1)
    world = make_world([[5.0, 5.0]], [[8.0, 5.0]])
    world.target_prev_xy = np.array([[6.0, 5.0]])
    inst = snapshot_instance(world, PrimitiveStateSet([np.array([[5.0, 5.0, 0.0]])], [(1,)]), config)
    assert inst.weights == {}


def test_parker_is_attracted_to_visible_targets(small_config):
    world = make_world([[5.0, 5.0]], [[8.0, 5.0], [15.0, 15.0]])
    config = small_config.with_overrides(robot_count=1, target_count=2)
    np.testing.assert_allclose(parker_policy(world, config), [[1.0, 0.0]])


def test_parker_robots_repel_each_other(small_config):
    world = make_world([[5.0, 5.0], [7.0, 5.0]], np.zeros((0, 2)))
    config = small_config.with_overrides(robot_count=2, target_count=0)
    np.testing.assert_allclose(parker_policy(world, config), [[-1.0, 0.0], [1.0, 0.0]])


def test_parker_stays_without_forces(small_config):
    world = make_world([[5.0, 5.0]], [[15.0, 15.0]])
    config = small_config.with_overrides(robot_count=1, target_count=1)
    np.testing.assert_array_equal(parker_policy(world, config), [[0.0, 0.0]])


def test_ranking_puts_the_force_direction_first(small_config):
    config = small_config.with_overrides(robot_count=1, target_count=1)
    world = make_world([[10.0, 10.0]], [[13.0, 10.0]])
    primitives = build_primitives(world, config, make_rng(0, 'test'))
    ranked = rank_primitives(world, primitives, config)
    np.testing.assert_allclose(ranked.poses[0][0], [11.0, 10.0, 0.0])
    np.testing.assert_allclose(np.sort(ranked.poses[0], axis=0), np.sort(primitives.poses[0], axis=0))
    assert ranked.candidates == primitives.candidates


def test_idle_robots_keep_going_and_turn_back_at_walls(small_config):
    config = small_config.with_overrides(robot_count=2, target_count=1)
    world = make_world([[5.0, 10.0], [19.5, 10.0]], [[5.0, 1.0]])
    np.testing.assert_allclose(preferred_displacement(world, config), [[1.0, 0.0], [-1.0, 0.0]], atol=1e-12)
    ranked = rank_primitives(world, build_primitives(world, config, make_rng(0, 'test')), config)
    np.testing.assert_allclose(ranked.poses[0][0, :2], [6.0, 10.0])
    np.testing.assert_allclose(ranked.poses[1][0, :2], [18.5, 10.0], atol=1e-12)
    assert ranked.poses[1][0, 2] == pytest.approx(math.pi)


def test_greedy_robots_without_targets_do_not_park(small_config):
    config = small_config.with_overrides(robot_count=1, target_count=1, moving_target_fraction=0.0, steps=3)
    world = make_world([[5.0, 10.0]], [[19.0, 1.0]])
    frame = run_episode(config, 'greedy', world=world)
    assert (frame['actual'] == 0).all()
    moved = make_world([[6.0, 10.0]], [[19.0, 1.0]])
    moved.step = 1
    assert frame['world_hash'].iloc[1] == moved.world_hash()


def test_local_policy_fits_the_fan_preset():
    config = load_sim_config('parker-cmp', steps=2)
    frame = run_episode(config, 'local', h=2, seed=0)
    assert len(frame) == 2
    assert (frame['rounds'] == 2).all()
    assert (frame['estimated'] >= 0).all()


def test_measure_actual_counts_each_target_once(small_config):
    world = make_world([[0.0, 0.0], [1.0, 0.0]], [[3.0, 0.0], [10.0, 0.0]])
    config = small_config.with_overrides(robot_count=2, target_count=2)
    value, observed = measure_actual(world, config)
    assert value == 1.0
    assert observed.tolist() == [True, False]
    value, _ = measure_actual(world, config.with_overrides(quality_mode='inverse-distance'))
    assert value == pytest.approx(0.5)


def test_comm_graph_from_positions():
    graph = comm_graph_from_positions(np.array([[0.0, 0.0], [3.0, 0.0], [10.0, 0.0]]), 5.0)
    assert graph.edges == frozenset({(1, 2)})


@pytest.mark.parametrize('policy', ['greedy', 'local', 'random', 'parker'])
def test_episodes_are_reproducible(small_config, policy):
    first = run_episode(small_config, policy, h=1, seed=4)
    assert list(first.columns) == Columns.EPISODE + Columns.EPISODE_EXTRA
    assert first['step'].tolist() == list(range(5))
    assert (first['policy'] == policy).all()
    pd.testing.assert_frame_equal(first, run_episode(small_config, policy, h=1, seed=4))


def test_policies_with_the_same_seed_start_from_the_same_world(small_config):
    hashes = {policy: run_episode(small_config, policy, seed=2)['world_hash'].iloc[0] for policy in ('greedy', 'random', 'parker')}
    assert len(set(hashes.values())) == 1


def test_parker_reports_no_estimate(small_config):
    frame = run_episode(small_config, 'parker')
    assert frame['estimated'].isna().all()
    assert (frame['rounds'] == 0).all()


def test_local_policy_uses_exactly_h_rounds(small_config):
    for h in (1, 2):
        assert (run_episode(small_config, 'local', h=h)['rounds'] == h).all()


def test_episode_edge_cases(small_config):
    empty = run_episode(small_config.with_overrides(target_count=0), 'greedy')
    assert (empty['actual'] == 0).all()
    assert (empty['observed_total'] == 0).all()
    none = run_episode(small_config.with_overrides(steps=0), 'greedy')
    assert none.empty
    assert list(none.columns) == Columns.EPISODE + Columns.EPISODE_EXTRA
    with pytest.raises(ValueError):
        run_episode(small_config, 'hungarian')


def test_estimate_matches_actual_with_stationary_visible_targets():
    config = SimConfig(arena_size=10.0, robot_step=1.0, target_step=0.5, target_turn_period=5, sensing_range=30.0, comm_range=40.0,
                       fan_headings=4, steps=3, robot_count=3, target_count=5, moving_target_fraction=0.0)
    frame = run_episode(config, 'greedy')
    assert (frame['estimated'] == frame['actual']).all()
    assert (frame['actual'] == 5).all()
    assert (frame['rounds'] == 3).all()


def test_out_of_range_sharing_is_counted_and_warned():
    config = SimConfig(arena_size=10.0, robot_step=1.0, target_step=0.5, target_turn_period=5, sensing_range=5.5, comm_range=6.0,
                       fan_headings=4, steps=1, robot_count=2, target_count=1, moving_target_fraction=0.0)
    world = make_world([[0.0, 5.0], [10.0, 5.0]], [[5.0, 5.0]])
    primitives = build_primitives(world, config, make_rng(0, 'test'))
    assert count_assumption_violations(snapshot_instance(world, primitives, config), world.robot_xy, config.comm_range) == 1
    with pytest.warns(CommunicationAssumptionWarning):
        frame = run_episode(config, 'greedy', world=world)
    assert frame['assumption_violations'].iloc[0] == 1


def test_single_step_comparison_shares_the_start(small_config):
    frame = compare_single_step(small_config, seeds=[0, 1])
    assert len(frame) == 4
    assert frame.groupby('seed')['world_hash'].nunique().eq(1).all()


def test_summaries_and_histograms(small_config):
    frame = pd.concat([run_episode(small_config, policy, seed=seed) for policy in ('greedy', 'parker') for seed in (0, 1)])
    summary = summarize_episode(frame)
    assert len(summary) == 4
    assert {'mean_actual', 'std_actual', 'final_observed', 'total_bytes'} <= set(summary.columns)

    table, marks = histogram_table([1.0, 2.0, 3.0, 4.0, math.nan], bins=2)
    assert table['count'].tolist() == [2, 2]
    assert marks == {'min': 1.0, 'median': 2.5, 'max': 4.0}
    table, marks = histogram_table([])
    assert table.empty
    assert math.isnan(marks['median'])
