import math
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from tethered_climb.climber import (ClimbRun, ClimbScenario, ClimbStatus, EventKind,
    LANDING_TOLERANCE, SHOOTING_TOLERANCE, inject_failure, run_climb)
from tethered_climb.dynamics import get_body
from tethered_climb.exceptions import ParameterDomainError
from tethered_climb.grip import GripModel
from tethered_climb.terrain import Asperity
from tethered_climb.tether import TetherSpec, TetherSystem

HOP = 1.27
WEIGHT = 3.0 * 3.71


def _failure_run(cycles=1):
    return ClimbRun(
        ClimbScenario(spines_per_robot=40),
        [Asperity((0.0, 0.0, 0.0), 40e-6, math.pi / 2)],
        GripModel(),
        TetherSystem.x_configuration(4, TetherSpec(200.0, 1.75, 25.0)),
        get_body('Mars'),
        cycles=cycles,
    )


@pytest.fixture(scope='module')
def recovered():
    """Robot 3 misses its grip on the first cycle."""
    return inject_failure(_failure_run(), 3, 0)


def test_nominal_cycle(climb_scenario, ideal_asperities, grip_model, climb_tethers, mars):
    """Every robot moves up one hop and burns one datum hop of propellant."""
    log = run_climb(climb_scenario, ideal_asperities, grip_model, climb_tethers, mars, 1)
    assert log.status == ClimbStatus.COMPLETED
    assert log.cycles_completed == 1

    positions = log.positions_frame()
    start = positions[positions['t'] == positions['t'].min()].set_index('robot')
    end = positions[positions['t'] == positions['t'].max()].set_index('robot')
    assert (end['z'] - start['z']).tolist() == pytest.approx([HOP] * 4, abs=0.01)
    assert (end['x'] - start['x']).tolist() == pytest.approx([0.0] * 4, abs=0.01)

    summary = log.summary()
    assert summary['hops'] == [1, 1, 1, 1]
    assert summary['duration_s'] == pytest.approx(6.0, abs=0.01)
    assert summary['total_propellant_kg'] == pytest.approx(0.020, rel=0.02)
    assert not log.events_of(EventKind.GRIP_FAIL)
    assert not log.events_of(EventKind.OFF_TARGET)


def test_center_rises_every_cycle(climb_scenario, ideal_asperities, grip_model, climb_tethers,
        mars):
    log = run_climb(climb_scenario, ideal_asperities, grip_model, climb_tethers, mars, 2)
    center = log.center_frame()
    at_boundaries = center.loc[center['cycle_boundary'], 'z'].to_numpy()
    heights = np.concatenate([[center['z'].iloc[0]], at_boundaries])
    assert len(at_boundaries) == 2
    assert np.diff(heights) == pytest.approx([HOP, HOP], abs=0.01)


def test_zero_hop_leaves_robots_in_place(climb_scenario, ideal_asperities, grip_model,
        climb_tethers, mars, robot):
    scenario = replace(climb_scenario, hop_distance=0.0, robot=robot)
    log = run_climb(scenario, ideal_asperities, grip_model, climb_tethers, mars, 1)
    assert log.status == ClimbStatus.COMPLETED
    positions = log.positions_frame()
    final = positions[positions['t'] == positions['t'].max()].sort_values('robot')
    assert final[['x', 'y', 'z']].to_numpy() == pytest.approx(np.array(scenario.initial_positions))
    assert log.summary()['total_propellant_kg'] == 0.0


def test_cycles_must_be_positive(climb_scenario, ideal_asperities, grip_model, climb_tethers, mars):
    with pytest.raises(ParameterDomainError):
        run_climb(climb_scenario, ideal_asperities, grip_model, climb_tethers, mars, 0)


def test_batch_must_leave_anchors(ideal_asperities, grip_model, climb_tethers, mars):
    with pytest.raises(ParameterDomainError):
        ClimbScenario(hop_batch=4).validate()
    with pytest.raises(ParameterDomainError):
        run_climb(ClimbScenario(hop_batch=4), ideal_asperities, grip_model, climb_tethers, mars, 1)


def test_failed_grip_is_recovered(recovered):
    assert recovered.status == ClimbStatus.RECOVERED
    assert recovered.cycles_completed == 1
    assert recovered.summary()['recovery_hops'][3] >= 1

    kinds = [e.kind for e in recovered.events if e.robot == 3]
    fail = kinds.index(EventKind.GRIP_FAIL)
    assert kinds[fail + 1] == EventKind.SLIP
    assert EventKind.RECOVERED in kinds[fail + 1:]


def test_slip_stays_above_the_tether_bound(recovered):
    """The tethers catch the slipping robot within one hop plus one stretch."""
    bound = -(HOP + WEIGHT / 200.0)
    assert recovered.lowest.min() >= bound, f"lowest {recovered.lowest.tolist()}"
    slip = recovered.events_of(EventKind.SLIP, robot=3)[0]
    assert slip.detail['lowest_z'] < slip.detail['slip_z']
    assert slip.detail['hang_z'] < slip.detail['slip_z']
    assert slip.detail['lowest_z'] >= slip.detail['arrest_z'] - 2e-3, f"{slip.detail}"


def test_recovered_robot_reaches_its_target(recovered):
    positions = recovered.positions_frame()
    final = positions[(positions['t'] == positions['t'].max()) & (positions['robot'] == 3)]
    assert final['z'].iloc[0] == pytest.approx(HOP, abs=2 * SHOOTING_TOLERANCE)


def test_anchors_never_drop_below_three(recovered):
    anchored = (
        recovered.positions_frame()
        .assign(anchored=lambda df: df['mode'] == 'ANCHORED')
        .groupby('t')['anchored']
        .sum()
    )
    assert anchored.min() >= 3, f"{anchored[anchored < 3].head()}"


def test_failure_injection_replays_exactly(recovered):
    again = inject_failure(_failure_run(), 3, 0)
    pd.testing.assert_frame_equal(recovered.positions_frame(), again.positions_frame())
    assert recovered.event_records() == again.event_records()


def test_failure_injection_range():
    with pytest.raises(ParameterDomainError):
        inject_failure(_failure_run(), 4, 0)
    with pytest.raises(ParameterDomainError):
        inject_failure(_failure_run(), 0, 1)


def _rise(log):
    positions = log.positions_frame()
    start = positions[positions['t'] == positions['t'].min()].set_index('robot')
    end = positions[positions['t'] == positions['t'].max()].set_index('robot')
    return end[['x', 'z']] - start[['x', 'z']]


def test_later_cycle_failure_keeps_every_robot_on_pace():
    """Robot 1 misses its grip on the second cycle; the team still climbs two hops."""
    log = inject_failure(_failure_run(cycles=2), 1, 1)
    assert log.status == ClimbStatus.RECOVERED
    assert log.cycles_completed == 2
    fail = log.events_of(EventKind.GRIP_FAIL)
    assert [(e.robot, e.cycle) for e in fail] == [(1, 1)]

    rise = _rise(log)
    assert rise['z'].tolist() == pytest.approx([2 * HOP] * 4, abs=LANDING_TOLERANCE), \
        f"{rise['z'].tolist()}"
    assert rise['x'].tolist() == pytest.approx([0.0] * 4, abs=0.01)


def test_short_landing_is_hopped_onto_target(climb_scenario, ideal_asperities, grip_model, mars):
    """Soft tethers at rest length hold a hop back; the robot re-hops to its target."""
    soft = TetherSystem.x_configuration(4, TetherSpec(1.0, 1.06, 0.0))
    log = run_climb(climb_scenario, ideal_asperities, grip_model, soft, mars, 1)
    assert log.status == ClimbStatus.RECOVERED
    assert log.cycles_completed == 1

    off = log.events_of(EventKind.OFF_TARGET, robot=0)
    assert off and off[0].detail['landing_error'] > LANDING_TOLERANCE
    assert log.summary()['recovery_hops'][0] >= 1
    assert not log.events_of(EventKind.GRIP_FAIL)

    rise = _rise(log)
    assert rise['z'].tolist() == pytest.approx([HOP] * 4, abs=LANDING_TOLERANCE), \
        f"{rise['z'].tolist()}"


def test_weak_anchors_fail_the_system(ideal_asperities, climb_tethers, mars):
    """Ten 1.5 N spines hold one robot but not the share of two hopping."""
    scenario = ClimbScenario(hop_batch=2, spines_per_robot=10)
    log = run_climb(scenario, ideal_asperities, GripModel(fixed_capacity=1.5), climb_tethers,
        mars, 1)
    assert log.status == ClimbStatus.FAILED
    assert log.snapshot is not None
    assert log.snapshot['robot'] in (2, 3)
    assert log.snapshot['load'] > 15.0
    assert log.cycles_completed == 0


def test_empty_tank_ends_partial(climb_scenario, ideal_asperities, grip_model, climb_tethers,
        mars, robot):
    scenario = replace(climb_scenario, robot=replace(robot, propellant_budget=0.004))
    log = run_climb(scenario, ideal_asperities, grip_model, climb_tethers, mars, 1)
    assert log.status == ClimbStatus.PARTIAL
    assert log.cycles_completed == 0
    assert log.snapshot['reason']
