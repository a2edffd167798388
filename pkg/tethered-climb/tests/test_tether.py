import numpy as np
import pytest
from scipy.optimize import minimize

from tethered_climb.climber import DEFAULT_POSITIONS
from tethered_climb.exceptions import ConvergenceError, ParameterDomainError
from tethered_climb.grip import GripState
from tethered_climb.tether import (Equilibrium, TetherEdge, TetherSpec, TetherSystem,
    arrest_height, check_equilibrium, hang_heights, hub_force, net_robot_force,
    robot_tether_forces, solve_hub, tether_force)

SPREAD = np.array([
    (-1.0, 0.0, 0.2),
    (1.3, 0.0, -0.1),
    (0.4, 0.0, 1.5),
    (-0.2, 0.0, -1.2),
])


def test_tether_force_hooke():
    spec = TetherSpec(100.0, 1.0)
    assert np.all(tether_force(spec, (0, 0, 0), (0, 0, 1.0)) == 0.0)
    assert np.all(tether_force(spec, (0, 0, 0), (0, 0, 0.5)) == 0.0)
    assert tether_force(spec, (0, 0, 0), (0, 0, 1.2)) == pytest.approx([0.0, 0.0, 20.0])


def test_tether_force_third_law():
    spec = TetherSpec(150.0, 0.5, 10.0)
    a, b = np.array([0.1, 0.0, -0.3]), np.array([0.9, 0.2, 0.4])
    va, vb = np.array([0.0, 0.0, 0.3]), np.array([0.1, 0.0, -0.2])
    on_a = tether_force(spec, a, b, vb - va)
    on_b = tether_force(spec, b, a, va - vb)
    assert on_a + on_b == pytest.approx(np.zeros(3), abs=1e-9)


def test_damping_never_pushes():
    """A fast-closing tether goes slack rather than push."""
    spec = TetherSpec(100.0, 1.0, 1000.0)
    assert np.all(tether_force(spec, (0, 0, 0), (0, 0, 1.01), (0, 0, -5.0)) == 0.0)


def test_tether_endpoints_must_differ():
    with pytest.raises(ParameterDomainError):
        tether_force(TetherSpec(), (0, 0, 0), (0, 0, 0))


def test_hub_centers_a_square():
    system = TetherSystem.x_configuration(4)
    positions = np.array([(1, 0, 1), (-1, 0, 1), (1, 0, -1), (-1, 0, -1)], dtype=float)
    assert solve_hub(system, positions) == pytest.approx(np.zeros(3), abs=1e-9)


def test_hub_of_two_robots_is_the_midpoint():
    system = TetherSystem.x_configuration(2)
    positions = np.array([(0.0, 0.0, 0.0), (0.0, 0.0, 3.0)])
    hub = solve_hub(system, positions, start=(0.1, 0.0, 1.6))
    assert hub == pytest.approx([0.0, 0.0, 1.5], abs=1e-6)


def test_hub_minimizes_elastic_energy():
    system = TetherSystem.x_configuration(4, TetherSpec(200.0, 0.8))

    def energy(hub):
        lengths = np.linalg.norm(SPREAD - hub, axis=1)
        return 0.5 * 200.0 * np.sum(np.maximum(lengths - 0.8, 0.0) ** 2)

    reference = minimize(energy, SPREAD.mean(axis=0), jac=lambda h: -hub_force(system, h, SPREAD),
        method='BFGS', options={'gtol': 1e-10})
    hub = solve_hub(system, SPREAD)
    assert hub == pytest.approx(reference.x, abs=1e-4)
    assert np.linalg.norm(hub_force(system, hub, SPREAD)) < 1e-6


def test_hub_ignores_robot_order():
    system = TetherSystem.x_configuration(4, TetherSpec(200.0, 0.8))
    assert solve_hub(system, SPREAD) == pytest.approx(solve_hub(system, SPREAD[::-1]), abs=1e-8)


def test_hub_solve_reports_no_convergence():
    system = TetherSystem.x_configuration(4, TetherSpec(200.0, 0.8))
    with pytest.raises(ConvergenceError) as err:
        solve_hub(system, SPREAD, start=(2.0, 0.0, 2.0), max_iter=0)
    assert err.value.residual > 1e-6


def test_tether_forces_balance_through_the_hub():
    """The hub is massless, so the robots feel no net tether force."""
    system = TetherSystem.x_configuration(4, TetherSpec(200.0, 0.8))
    forces, hub = robot_tether_forces(system, SPREAD)
    assert hub is not None
    assert forces.sum(axis=0) == pytest.approx(np.zeros(3), abs=1e-5)


def test_free_hub_follows_a_rising_robot(climb_tethers):
    """A tether at rest length drags the free hub instead of braking the robot."""
    before = np.array(DEFAULT_POSITIONS, dtype=float)
    hub = solve_hub(climb_tethers, before)
    positions = before.copy()
    positions[0, 2] = 2.5
    velocities = np.zeros_like(positions)
    velocities[0, 2] = 2.0
    forces, moved = robot_tether_forces(climb_tethers, positions, velocities, hub_start=hub)
    assert np.linalg.norm(moved - positions[0]) == pytest.approx(1.75, abs=1e-6)
    assert np.linalg.norm(forces[0]) < 1e-2, f"pull {forces[0]}"


def test_damping_uses_the_hub_rate():
    """Between two taut tethers the hub moves at half the robot's speed."""
    system = TetherSystem.x_configuration(2, TetherSpec(200.0, 1.0, 25.0))
    positions = np.array([(0.0, 0.0, 0.0), (0.0, 0.0, 3.0)])
    velocities = np.array([(0.0, 0.0, 0.0), (0.0, 0.0, 1.0)])
    forces, hub = robot_tether_forces(system, positions, velocities)
    assert hub == pytest.approx([0.0, 0.0, 1.5], abs=1e-6)
    assert forces[1] == pytest.approx([0.0, 0.0, -112.5], abs=1e-2)
    assert forces[0] == pytest.approx([0.0, 0.0, 112.5], abs=1e-2)


def test_slack_tethers_leave_only_gravity(mars):
    system = TetherSystem.x_configuration(4, TetherSpec(200.0, 1.75))
    f_g, f_s = net_robot_force(system, 3, DEFAULT_POSITIONS, mars, 3.0)
    assert f_g == pytest.approx([0.0, 0.0, -11.13])
    assert np.all(f_s == 0.0)
    with pytest.raises(ParameterDomainError):
        net_robot_force(system, 4, DEFAULT_POSITIONS, mars, 3.0)


def test_equilibrium_against_capacity():
    f_g = np.array([0.0, 0.0, -11.13])
    assert check_equilibrium(GripState.from_contacts([1.5] * 7), f_g, np.zeros(3)) == Equilibrium.SLIPS
    assert check_equilibrium(GripState.from_contacts([1.5] * 8), f_g, np.zeros(3)) == Equilibrium.HOLDS


def test_equilibrium_boundary_holds():
    grip = GripState.from_contacts([1.5, 1.5])
    assert check_equilibrium(grip, (0.0, 0.0, -3.0), np.zeros(3)) == Equilibrium.HOLDS
    assert check_equilibrium(GripState.empty(), np.zeros(3), np.zeros(3)) == Equilibrium.HOLDS


def test_strict_equilibrium_splits_the_load():
    grip = GripState.from_contacts([1.5] * 8)
    f_g = np.array([0.0, 0.0, -11.13])
    off_wall = np.array([0.0, -6.0, 0.0])
    assert check_equilibrium(grip, f_g, off_wall) == Equilibrium.SLIPS
    assert check_equilibrium(grip, f_g, off_wall, strict=True) == Equilibrium.HOLDS
    assert check_equilibrium(grip, f_g, 1.5 * off_wall, strict=True) == Equilibrium.SLIPS


def test_hanging_robot_balances(mars):
    system = TetherSystem.x_configuration(4, TetherSpec(200.0, 1.75))
    positions = np.array(DEFAULT_POSITIONS, dtype=float)
    z = hang_heights(system, [3], positions, mars, 3.0)[0]
    assert z < positions[3, 2]

    positions[3, 2] = z
    forces, _ = robot_tether_forces(system, positions)
    assert forces[3, 2] == pytest.approx(11.13, abs=1e-3)
    assert forces[:3, 2].sum() == pytest.approx(-11.13, abs=1e-3)


def test_arrest_falls_past_the_hanging_height(mars):
    system = TetherSystem.x_configuration(4, TetherSpec(200.0, 1.75))
    positions = np.array(DEFAULT_POSITIONS, dtype=float)
    hang = hang_heights(system, [3], positions, mars, 3.0)[0]
    still = arrest_height(system, 3, positions, mars, 3.0)
    moving = arrest_height(system, 3, positions, mars, 3.0, fall_speed=1.0)
    assert moving < still < hang < positions[3, 2]


def test_weak_tether_never_holds(mars):
    system = TetherSystem(('robot_0', 'robot_1'), (TetherEdge('robot_0', 'robot_1',
        TetherSpec(1e-3, 1.0)),))
    system.validate()
    positions = np.array([(0.0, 0.0, 0.0), (0.0, 0.0, 0.5)])
    with pytest.raises(ConvergenceError):
        hang_heights(system, [0], positions, mars, 3.0)


def test_system_validation():
    with pytest.raises(ParameterDomainError):
        TetherSystem.x_configuration(1).validate()
    with pytest.raises(ParameterDomainError):
        TetherSpec(rest_length=0.0).validate()
    with pytest.raises(ParameterDomainError):
        TetherSystem(('robot_0', 'robot_1', 'robot_2'),
            (TetherEdge('robot_0', 'robot_1'),)).validate()
    TetherSystem.x_configuration(4).validate()
