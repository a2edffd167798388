"""Rigid-body hop dynamics: main thruster along body +z, reaction-wheel
attitude control with a PD law, fixed-step RK4.

Attitude is stored as a scalar-last unit quaternion (scipy convention) and
exposed as (roll, pitch, yaw) from the Z-Y-X intrinsic decomposition.
Body rates are integrated directly from wheel torque on the inertia of a
solid sphere; the robot mass is held constant over a hop while propellant
is booked separately.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.spatial.transform import Rotation

from .exceptions import ParameterDomainError, PlanningError

# standard gravity used in the rocket equation, m/s^2
G0 = 9.80665
ZHAT = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class Body:
    name: str
    gravity: float

    def validate(self):
        if not self.gravity > 0.0:
            raise ParameterDomainError(f'gravity of {self.name} must be positive, got {self.gravity}')


BODIES = {
    'Mars': Body('Mars', 3.71),
    'Moon': Body('Moon', 1.62),
    'Ceres': Body('Ceres', 0.27),
    'Phobos': Body('Phobos', 0.0057),
}


def get_body(name, gravity=None):
    """Looks up a body by name; `gravity` overrides or defines it."""
    if gravity is not None:
        body = Body(name, float(gravity))
    elif name in BODIES:
        body = BODIES[name]
    else:
        raise ParameterDomainError(f'unknown body {name!r}; give its gravity explicitly')
    body.validate()
    return body


class Mode(Enum):
    ANCHORED = 'ANCHORED'
    HOPPING = 'HOPPING'
    GRIPPING = 'GRIPPING'
    SLIPPED = 'SLIPPED'


@dataclass(frozen=True)
class RobotParams:
    mass: float = 3.0
    diameter: float = 0.3
    # None until calibrated, see calibrate_thrust
    thrust_magnitude: float = None
    specific_impulse: float = 300.0
    kp: tuple = (0.2, 0.2, 0.2)
    # critical damping for kp on a 3 kg, 0.3 m solid sphere
    kd: tuple = (0.147, 0.147, 0.147)
    propellant_budget: float = 1.0
    torque_limit: float = 0.1
    hop_time: float = 1.5
    dt: float = 1e-3

    @property
    def inertia(self):
        return 0.4 * self.mass * (0.5 * self.diameter) ** 2

    @property
    def gains(self):
        return np.asarray(self.kp, dtype=float), np.asarray(self.kd, dtype=float)

    @property
    def mass_flow(self):
        return self.thrust_magnitude / (self.specific_impulse * G0)

    def validate(self, need_thrust=True):
        for name in ('mass', 'diameter', 'specific_impulse', 'propellant_budget',
                'torque_limit', 'hop_time', 'dt'):
            if not getattr(self, name) > 0.0:
                raise ParameterDomainError(f'{name} must be positive, got {getattr(self, name)}')
        if len(self.kp) != 3 or len(self.kd) != 3:
            raise ParameterDomainError('kp and kd need one gain per axis')
        if min(self.kp) < 0.0 or min(self.kd) < 0.0:
            raise ParameterDomainError('controller gains must be non-negative')
        if self.thrust_magnitude is not None and not self.thrust_magnitude > 0.0:
            raise ParameterDomainError(f'thrust_magnitude must be positive, got {self.thrust_magnitude}')
        if need_thrust and self.thrust_magnitude is None:
            raise ParameterDomainError('thrust_magnitude is not set; calibrate the thruster first')


@dataclass(frozen=True, eq=False)
class RobotState:
    position: np.ndarray
    velocity: np.ndarray
    attitude: np.ndarray
    angular_velocity: np.ndarray
    propellant: float
    mode: Mode = Mode.ANCHORED
    time: float = 0.0
    burn_truncated: bool = False

    def __post_init__(self):
        if self.propellant < 0.0:
            raise ParameterDomainError(f'propellant cannot be negative, got {self.propellant}')

    @classmethod
    def at_rest(cls, position, propellant, mode=Mode.ANCHORED, time=0.0):
        return cls(
            position=np.asarray(position, dtype=float).copy(),
            velocity=np.zeros(3),
            attitude=np.array([0.0, 0.0, 0.0, 1.0]),
            angular_velocity=np.zeros(3),
            propellant=float(propellant),
            mode=mode,
            time=float(time),
        )

    @property
    def euler(self):
        """(roll, pitch, yaw) in rad."""
        return Rotation.from_quat(self.attitude).as_euler('ZYX')[::-1]

    def vector(self):
        return np.concatenate([self.position, self.velocity, self.attitude, self.angular_velocity])

    def with_vector(self, y, **changes):
        q = y[6:10] / np.linalg.norm(y[6:10])
        return replace(self, position=y[0:3].copy(), velocity=y[3:6].copy(), attitude=q,
            angular_velocity=y[10:13].copy(), **changes)


@dataclass(frozen=True)
class AttitudeCommand:
    """Desired attitude and body rates plus which terms of the PD law act.

        law is one of 'pd' (both terms), 'rate' (derivative command only) or
        'hold' (proportional only).
    """
    euler: tuple = (0.0, 0.0, 0.0)
    rate: tuple = (0.0, 0.0, 0.0)
    law: str = 'pd'

    def gains(self, params):
        kp, kd = params.gains
        if self.law == 'rate':
            return np.zeros(3), kd
        if self.law == 'hold':
            return kp, np.zeros(3)
        if self.law == 'pd':
            return kp, kd
        raise ParameterDomainError(f'unknown control law {self.law!r}')


def wrap_angle(angle):
    """Wraps to (-pi, pi]."""
    return math.pi - np.mod(math.pi - np.asarray(angle, dtype=float), 2.0 * math.pi)


def pd_torque(gains, e_des, e_act, w_des, w_act, limit=None):
    """Reaction-wheel torque Kp (e_des - e_act) + Kd (w_des - w_act), per axis.

        Args:
            gains (tuple): (kp, kd), scalars or 3-vectors
            e_des, e_act: desired and actual (roll, pitch, yaw) in rad
            w_des, w_act: desired and actual body rates in rad/s
            limit (float): wheel torque saturation in N m, None for none
        Returns
            3-vector torque in N m
    """
    kp, kd = gains
    error = wrap_angle(np.asarray(e_des, dtype=float) - np.asarray(e_act, dtype=float))
    rate_error = np.asarray(w_des, dtype=float) - np.asarray(w_act, dtype=float)
    torque = np.asarray(kp) * error + np.asarray(kd) * rate_error
    if limit is not None:
        torque = np.clip(torque, -limit, limit)
    return torque


def _quaternion_rate(q, omega):
    vec = q[:3]
    w = q[3]
    return np.concatenate([
        0.5 * (w * omega + np.cross(vec, omega)),
        [-0.5 * np.dot(vec, omega)],
    ])


def _derivative(y, params, body, thrust, external_force, command):
    position, velocity, q, omega = y[0:3], y[3:6], y[6:10], y[10:13]
    rotation = Rotation.from_quat(q)

    force = np.zeros(3)
    if thrust > 0.0:
        force += rotation.apply([0.0, 0.0, thrust])
    if external_force is not None:
        ext = external_force(position, velocity) if callable(external_force) else external_force
        force += np.asarray(ext, dtype=float)
    acceleration = force / params.mass
    acceleration[2] -= body.gravity

    torque = pd_torque(command.gains(params), command.euler,
        rotation.as_euler('ZYX')[::-1], command.rate, omega, params.torque_limit)

    return np.concatenate([velocity, acceleration, _quaternion_rate(q, omega),
        torque / params.inertia])


def _rk4(y, h, params, body, thrust, external_force, command):
    k1 = _derivative(y, params, body, thrust, external_force, command)
    k2 = _derivative(y + 0.5 * h * k1, params, body, thrust, external_force, command)
    k3 = _derivative(y + 0.5 * h * k2, params, body, thrust, external_force, command)
    k4 = _derivative(y + h * k3, params, body, thrust, external_force, command)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state, params, body, thrust_on, external_force, dt, command=None):
    """Advances one robot by `dt` with RK4.

        `external_force` is a 3-vector in N or a callable
        `(position, velocity) -> force` evaluated at every RK4 stage. When the
        propellant runs out inside the step the burn is cut at that instant,
        the rest of the step coasts and the returned state is flagged
        `burn_truncated`.
    """
    if not dt > 0.0:
        raise ParameterDomainError(f'dt must be positive, got {dt}')
    command = command or AttitudeCommand()
    y = state.vector()
    propellant = state.propellant
    truncated = state.burn_truncated

    if thrust_on:
        params.validate()
        flow = params.mass_flow
        burn = min(dt, propellant / flow)
        if burn < dt:
            truncated = True
            logging.debug(f'propellant exhausted at t={state.time + burn:.4f} s')
        if burn > 0.0:
            y = _rk4(y, burn, params, body, params.thrust_magnitude, external_force, command)
        if dt - burn > 0.0:
            y = _rk4(y, dt - burn, params, body, 0.0, external_force, command)
        propellant = 0.0 if truncated else max(0.0, propellant - flow * burn)
    else:
        y = _rk4(y, dt, params, body, 0.0, external_force, command)

    return state.with_vector(y, propellant=propellant, time=state.time + dt,
        burn_truncated=truncated)


def attitude_for(direction):
    """(roll, pitch, yaw) that points body +z along `direction`, zero yaw."""
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    roll = -math.asin(max(-1.0, min(1.0, u[1])))
    pitch = math.atan2(u[0], u[2])
    return (roll, pitch, 0.0)


def max_reach(params, body, flight_time=None):
    """Largest straight-up displacement reachable in `flight_time`."""
    t = flight_time or params.hop_time
    return params.thrust_magnitude * t ** 2 / (2.0 * params.mass) - 0.5 * body.gravity * t ** 2


@dataclass(frozen=True)
class HopPlan:
    displacement: tuple
    direction: tuple
    burn_time: float
    flight_time: float
    propellant: float
    surface: str = 'vertical'
    command: AttitudeCommand = field(default_factory=AttitudeCommand)

    @property
    def is_null(self):
        return self.burn_time == 0.0


def plan_hop(state, params, body, displacement, surface='vertical', flight_time=None):
    """Burn-coast profile along a fixed thrust direction that lands the robot
        at `displacement` after `flight_time`.

        The thrust direction is w/|w| with w = displacement + g t^2/2 z, and
        the burn impulse is the smaller root of j^2 - 2 T t j + 2 T m |w| = 0.
        On a vertical wall the flight uses the derivative (rate) command, on a
        horizontal surface the proportional hold.
    """
    params.validate()
    t = flight_time or params.hop_time
    delta = np.asarray(displacement, dtype=float)
    law = {'vertical': 'rate', 'horizontal': 'hold'}.get(surface)
    if law is None:
        raise ParameterDomainError(f'surface must be vertical or horizontal, got {surface!r}')

    if not np.any(delta):
        return HopPlan(tuple(delta), (0.0, 0.0, 1.0), 0.0, t, 0.0, surface,
            AttitudeCommand(law=law))

    thrust = params.thrust_magnitude
    w = delta + 0.5 * body.gravity * t ** 2 * ZHAT
    w_norm = float(np.linalg.norm(w))
    reach = max_reach(params, body, t)
    disc = (thrust * t) ** 2 - 2.0 * thrust * params.mass * w_norm
    if disc < 0.0:
        raise PlanningError(
            f'displacement {delta.round(4).tolist()} m is out of reach in {t} s '
            f'(max vertical reach {reach:.3f} m)', max_reach=reach)

    impulse = thrust * t - math.sqrt(disc)
    propellant = impulse / (params.specific_impulse * G0)
    if propellant > state.propellant:
        raise PlanningError(
            f'hop needs {propellant * 1e3:.2f} g of propellant, '
            f'{state.propellant * 1e3:.2f} g left', max_reach=reach)

    direction = w / w_norm
    command = AttitudeCommand(euler=attitude_for(direction), law=law)
    return HopPlan(tuple(delta), tuple(direction), impulse / thrust, t, propellant, surface, command)


def hop_step(state, plan, params, body, elapsed, h, external_force=None):
    """One integration step of a planned hop, splitting the step at burn
        cut-off so the burn window is exact.
    """
    burn_end = plan.burn_time
    if elapsed + h <= burn_end:
        return step(state, params, body, True, external_force, h, plan.command)
    if elapsed >= burn_end:
        return step(state, params, body, False, external_force, h, plan.command)
    first = burn_end - elapsed
    state = step(state, params, body, True, external_force, first, plan.command)
    return step(state, params, body, False, external_force, h - first, plan.command)


def hop_steps(plan, dt):
    """Step sizes covering the flight, the last one trimmed to land on time."""
    count = max(1, math.ceil(plan.flight_time / dt - 1e-9))
    sizes = [dt] * count
    sizes[-1] = plan.flight_time - (count - 1) * dt
    return sizes


def fly_hop(state, plan, params, body, external_force=None, record_every=1):
    """Integrates a planned hop; returns the sampled states, launch included."""
    current = replace(state, mode=Mode.HOPPING, burn_truncated=False)
    trajectory = [current]
    elapsed = 0.0
    sizes = hop_steps(plan, params.dt)
    for k, h in enumerate(sizes):
        current = hop_step(current, plan, params, body, elapsed, h, external_force)
        elapsed = (k + 1) * params.dt
        if (k + 1) % record_every == 0 or k == len(sizes) - 1:
            trajectory.append(current)
    return trajectory


def attitude_error(state, euler):
    return float(np.max(np.abs(wrap_angle(np.asarray(euler) - state.euler))))


def slew(state, params, body, euler, tolerance=math.radians(0.1), timeout=10.0):
    """Turns the robot in place to `euler` with the full PD law while its grip
        holds it; position and velocity are left unchanged.
    """
    command = AttitudeCommand(euler=tuple(euler), law='pd')
    support = np.array([0.0, 0.0, params.mass * body.gravity])
    current = state
    elapsed = 0.0
    while attitude_error(current, euler) >= tolerance \
            or float(np.max(np.abs(current.angular_velocity))) >= tolerance:
        if elapsed >= timeout:
            logging.warning(f'slew did not settle within {timeout} s '
                f'(error {math.degrees(attitude_error(current, euler)):.3f} deg)')
            break
        current = step(current, params, body, False, support, params.dt, command)
        elapsed += params.dt
    return replace(current, position=state.position.copy(), velocity=state.velocity.copy())


def execute_hop(state, params, body, target_displacement, surface='vertical',
        external_force=None, record_every=1):
    """Plans and flies one hop.

        Returns
            (trajectory, propellant_used): the sampled RobotStates from launch
            to landing and the propellant burned in kg
    """
    plan = plan_hop(state, params, body, target_displacement, surface)
    if plan.is_null:
        return [state], 0.0
    start = state
    if attitude_error(state, plan.command.euler) > math.radians(0.1):
        start = slew(state, params, body, plan.command.euler)
    trajectory = fly_hop(start, plan, params, body, external_force, record_every)
    return trajectory, state.propellant - trajectory[-1].propellant


def calibrate_thrust(params, body, distance=1.27, hop_time=1.5, propellant=0.005):
    """Thrust that makes a straight-up hop of `distance` in `hop_time` burn
        exactly `propellant` kg.
    """
    params.validate(need_thrust=False)
    body.validate()
    impulse = propellant * params.specific_impulse * G0
    w = distance + 0.5 * body.gravity * hop_time ** 2
    denom = hop_time - params.mass * w / impulse
    if denom <= 0.0:
        raise PlanningError(f'{propellant * 1e3:.2f} g cannot lift the robot {distance} m '
            f'in {hop_time} s on {body.name}')
    thrust = impulse / (2.0 * denom)
    if thrust <= params.mass * body.gravity:
        raise PlanningError(f'calibrated thrust {thrust:.3f} N does not lift the robot on {body.name}')
    return thrust


def calibrated(params, body, distance=1.27, hop_time=1.5, propellant=0.005):
    return replace(params, thrust_magnitude=calibrate_thrust(params, body, distance, hop_time,
        propellant), hop_time=hop_time)


def single_hop_height(params, body, propellant=0.005):
    """Apex height of a straight-up hop that burns `propellant` kg, from the
        integrator. The coast uses a coarser step sized to the coast time.
    """
    params.validate()
    state = RobotState.at_rest((0.0, 0.0, 0.0), propellant, Mode.HOPPING)
    while state.propellant > 0.0:
        state = step(state, params, body, True, None, params.dt)
    vz = state.velocity[2]
    if vz <= 0.0:
        return float(state.position[2])
    coast_dt = max(params.dt, vz / (body.gravity * 2000.0))
    while True:
        to_apex = state.velocity[2] / body.gravity
        if to_apex <= coast_dt:
            if to_apex > 0.0:
                state = step(state, params, body, False, None, to_apex)
            return float(state.position[2])
        state = step(state, params, body, False, None, coast_dt)
