"""Tethered multirobot climbing gait.

Robots hop up-slope (+z) in batches, grip where they land and must leave
enough anchored robots to carry the whole system. A robot whose grip fails
slides down its fall line until the tethers catch it, then hops back to its
target.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import pandas as pd

from . import rng as streams
from .dynamics import (Mode, RobotParams, RobotState, attitude_error, calibrated, hop_step,
    hop_steps, max_reach, plan_hop, slew)
from .exceptions import ParameterDomainError, PlanningError
from .grip import GripModel, GripState
from .terrain import TerrainPatch, extract_asperities
from .tether import (Equilibrium, arrest_height, check_equilibrium, hang_heights,
    robot_tether_forces)

DEFAULT_POSITIONS = (
    (1.5, 0.0, 1.5),
    (1.5, 0.0, 0.0),
    (0.0, 0.0, 1.5),
    (0.0, 0.0, 0.0),
)
# a recovery hop lands within this distance of its aim point, m
SHOOTING_TOLERANCE = 1e-3
# a landing further than this from its target is re-hopped, m
LANDING_TOLERANCE = 2.0 * SHOOTING_TOLERANCE


class ClimbStatus(Enum):
    COMPLETED = 'COMPLETED'
    RECOVERED = 'RECOVERED'
    PARTIAL = 'PARTIAL'
    FAILED = 'FAILED'


class EventKind(Enum):
    HOP_START = 'HOP_START'
    GRIP_OK = 'GRIP_OK'
    GRIP_FAIL = 'GRIP_FAIL'
    SLIP = 'SLIP'
    RECOVERED = 'RECOVERED'
    OFF_TARGET = 'OFF_TARGET'


@dataclass(frozen=True)
class ClimbScenario:
    robot_count: int = 4
    hop_batch: int = 1
    hop_distance: float = 1.27
    initial_positions: tuple = DEFAULT_POSITIONS
    # recorded only; engagement does not depend on it
    approach_angle: float = 55.0
    spines_per_robot: int = 60
    rng_seed: int = 0
    robot: RobotParams = field(default_factory=RobotParams)
    # propellant the thruster is calibrated to burn per nominal hop, kg
    propellant_per_hop: float = 0.005
    gait_order: tuple = None
    retry_limit: int = 5
    settle_speed: float = 1e-3
    settle_timeout: float = 30.0
    log_every: int = 10
    # (robot, cycle) pairs whose first landing in that cycle fails
    failures: tuple = ()
    strict_equilibrium: bool = False

    def validate(self):
        n, count = self.hop_batch, self.robot_count
        if not 1 <= n < count:
            raise ParameterDomainError(f'need 1 <= hop_batch < robot_count, got {n} and {count}')
        if len(self.initial_positions) != count:
            raise ParameterDomainError(
                f'{len(self.initial_positions)} initial positions for {count} robots')
        positions = np.asarray(self.initial_positions, dtype=float)
        if positions.shape != (count, 3):
            raise ParameterDomainError('initial positions must be 3-vectors')
        if len({tuple(p) for p in positions.tolist()}) != count:
            raise ParameterDomainError('initial positions must be distinct')
        if self.hop_distance < 0.0:
            raise ParameterDomainError(f'hop_distance cannot be negative, got {self.hop_distance}')
        if self.spines_per_robot < 1:
            raise ParameterDomainError('spines_per_robot must be positive')
        if self.retry_limit < 1:
            raise ParameterDomainError('retry_limit must be positive')
        if self.log_every < 1:
            raise ParameterDomainError('log_every must be positive')
        if not self.settle_speed > 0.0 or not self.settle_timeout > 0.0:
            raise ParameterDomainError('settle_speed and settle_timeout must be positive')
        if self.gait_order is not None and sorted(self.gait_order) != list(range(count)):
            raise ParameterDomainError(f'gait_order must be a permutation of 0..{count - 1}')
        for robot, cycle in self.failures:
            if not 0 <= robot < count or cycle < 0:
                raise ParameterDomainError(f'failure ({robot}, {cycle}) out of range')
        self.robot.validate(need_thrust=False)

    @property
    def order(self):
        return tuple(self.gait_order) if self.gait_order is not None else tuple(range(self.robot_count))

    @property
    def batches(self):
        order = self.order
        return [order[k:k + self.hop_batch] for k in range(0, len(order), self.hop_batch)]


@dataclass(frozen=True)
class ClimbEvent:
    sequence: int
    time: float
    robot: int
    cycle: int
    kind: EventKind
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            'sequence': self.sequence,
            't': self.time,
            'robot': self.robot,
            'cycle': self.cycle,
            'kind': self.kind.value,
            'detail': self.detail,
        }


@dataclass
class ClimbLog:
    robot_count: int
    samples: list = field(default_factory=list)
    events: list = field(default_factory=list)
    status: ClimbStatus = ClimbStatus.COMPLETED
    cycles_completed: int = 0
    boundaries: list = field(default_factory=list)
    snapshot: dict = None

    def __post_init__(self):
        self.propellant_used = np.zeros(self.robot_count)
        self.hops = np.zeros(self.robot_count, dtype=int)
        self.recovery_hops = np.zeros(self.robot_count, dtype=int)
        self.lowest = np.full(self.robot_count, np.inf)

    def add_event(self, time, robot, cycle, kind, **detail):
        event = ClimbEvent(len(self.events), time, robot, cycle, kind, detail)
        self.events.append(event)
        logging.info(f'\tt={time:8.3f} s robot {robot} cycle {cycle}: {kind.value}')
        return event

    def events_of(self, kind, robot=None):
        return [e for e in self.events if e.kind == kind and (robot is None or e.robot == robot)]

    def positions_frame(self):
        return pd.DataFrame(self.samples, columns=['t', 'robot', 'x', 'y', 'z', 'mode'])

    def center_frame(self):
        center = (
            self.positions_frame()
            .groupby('t', sort=True)[['x', 'y', 'z']]
            .mean()
            .reset_index()
        )
        center['cycle_boundary'] = center['t'].isin(self.boundaries)
        return center

    def event_records(self):
        return [e.to_dict() for e in self.events]

    def summary(self):
        return {
            'status': self.status.value,
            'cycles_completed': self.cycles_completed,
            'hops': self.hops.tolist(),
            'recovery_hops': self.recovery_hops.tolist(),
            'propellant_used_kg': self.propellant_used.tolist(),
            'total_propellant_kg': float(self.propellant_used.sum()),
            'lowest_z': self.lowest.tolist(),
            'duration_s': self.samples[-1][0] if self.samples else 0.0,
            'snapshot': self.snapshot,
        }


class _Stop(Exception):
    """Ends a run early; the log already carries the final status."""


class _Climb:
    def __init__(self, scenario, terrain, grip_model, tethers, body, cycles):
        scenario.validate()
        grip_model.validate()
        tethers.validate()
        body.validate()
        if cycles < 1:
            raise ParameterDomainError(f'cycles must be at least 1, got {cycles}')
        if len(tethers.robots) != scenario.robot_count:
            raise ParameterDomainError(
                f'tether system has {len(tethers.robots)} robots, scenario {scenario.robot_count}')

        self.scenario = scenario
        self.grip_model = grip_model
        self.tethers = tethers
        self.body = body
        self.cycles = cycles
        self.asperities = extract_asperities(terrain) if isinstance(terrain, TerrainPatch) \
            else list(terrain)

        params = scenario.robot
        if params.thrust_magnitude is None:
            params = calibrated(params, body, scenario.hop_distance, params.hop_time,
                scenario.propellant_per_hop)
            logging.info(f'Calibrated thrust: {params.thrust_magnitude:.4f} N')
        self.params = params
        self.weight = params.mass * body.gravity
        # static load each anchored robot must carry while a batch is off the wall
        self.share = scenario.robot_count * self.weight / (scenario.robot_count - scenario.hop_batch)

        self.rng = streams.stream(scenario.rng_seed, streams.CLIMB_GRIP)
        self.array = grip_model.array(scenario.spines_per_robot)
        self.states = [
            RobotState.at_rest(p, params.propellant_budget) for p in scenario.initial_positions
        ]
        self.grips = [grip_model.sample(self.array, self.asperities, self.rng)
            for _ in self.states]
        self.forced = set(tuple(f) for f in scenario.failures)
        self.hub = None
        self.time = 0.0
        self.log = ClimbLog(scenario.robot_count)

    # bookkeeping

    def _positions(self):
        return np.array([s.position for s in self.states])

    def _record(self):
        if self.log.samples and self.log.samples[-1][0] == self.time:
            return
        for i, s in enumerate(self.states):
            self.log.samples.append((self.time, i, *s.position.tolist(), s.mode.value))
        self._track_lowest()

    def _track_lowest(self):
        z = self._positions()[:, 2]
        np.minimum(self.log.lowest, z, out=self.log.lowest)

    def _stop(self, status, **snapshot):
        self.log.status = status
        if snapshot:
            snapshot.update({
                'time': self.time,
                'positions': self._positions().tolist(),
                'modes': [s.mode.value for s in self.states],
                'capacities': [g.total_capacity for g in self.grips],
            })
            self.log.snapshot = snapshot
        self._record()
        raise _Stop()

    # physics

    def _tether_pull(self, index, snapshot):
        def force(position, velocity):
            positions = snapshot.copy()
            positions[index] = position
            velocities = np.zeros_like(positions)
            velocities[index] = velocity
            forces, self.hub = robot_tether_forces(self.tethers, positions, velocities, self.hub)
            return forces[index]
        return force

    def _fly(self, indices, plans, sandbox=False):
        """Flies the robots in `indices` together. Tether coupling between
            them is taken from the positions at the start of each step.
        """
        saved_hub = self.hub
        states = {i: self.states[i] for i in indices}
        turn = 0.0
        for i, plan in zip(indices, plans):
            if attitude_error(states[i], plan.command.euler) > math.radians(0.1):
                turned = slew(states[i], self.params, self.body, plan.command.euler)
                turn = max(turn, turned.time - states[i].time)
                states[i] = turned
            states[i] = replace(states[i], mode=Mode.HOPPING, burn_truncated=False)
        if not sandbox:
            self.time += turn
            for i in indices:
                self.states[i] = states[i]

        sizes = hop_steps(plans[0], self.params.dt)
        for k, h in enumerate(sizes):
            snapshot = self._positions()
            for i in indices:
                snapshot[i] = states[i].position
            for i, plan in zip(indices, plans):
                pull = self._tether_pull(i, snapshot)
                states[i] = hop_step(states[i], plan, self.params, self.body, k * self.params.dt,
                    h, pull)
            if not sandbox:
                self.time += h
                for i in indices:
                    self.states[i] = states[i]
                self._track_lowest()
                if (k + 1) % self.scenario.log_every == 0:
                    self._record()

        if sandbox:
            self.hub = saved_hub
        else:
            self._record()
        return states

    def _land(self, i, cycle):
        """Grip attempt at the landing point; True when the robot anchors."""
        state = replace(self.states[i], mode=Mode.GRIPPING)
        forced = (i, cycle) in self.forced
        if forced:
            self.forced.discard((i, cycle))
            grip = GripState.empty(self.grip_model.band)
        else:
            grip = self.grip_model.sample(self.array, self.asperities, self.rng)
        self.grips[i] = grip

        if grip.total_capacity >= self.share:
            self.states[i] = replace(state, velocity=np.zeros(3), angular_velocity=np.zeros(3),
                mode=Mode.ANCHORED)
            self.log.add_event(self.time, i, cycle, EventKind.GRIP_OK,
                capacity=grip.total_capacity, engaged=grip.engaged_count)
            return True

        self.states[i] = replace(state, mode=Mode.SLIPPED)
        self.log.add_event(self.time, i, cycle, EventKind.GRIP_FAIL,
            capacity=grip.total_capacity, required=self.share, forced=forced)
        return False

    def _fall_acceleration(self, indices, zs, vzs):
        positions = self._positions()
        positions[indices, 2] = zs
        velocities = np.zeros_like(positions)
        velocities[indices, 2] = vzs
        forces, self.hub = robot_tether_forces(self.tethers, positions, velocities, self.hub)
        return forces[indices, 2] / self.params.mass - self.body.gravity

    def _settle(self, indices, cycle, launch):
        """Slides slipped robots down their fall lines until the tethers hold
            them still, then places them at their static hanging heights.
        """
        indices = list(indices)
        dt = self.params.dt
        zs = np.array([self.states[i].position[2] for i in indices])
        vzs = np.array([self.states[i].velocity[2] for i in indices])
        slip_z = zs.copy()
        lowest = zs.copy()
        # undamped energy bound, each robot taken alone
        arrest = [arrest_height(self.tethers, i, self._positions(), self.body, self.params.mass,
            max(-self.states[i].velocity[2], 0.0)) for i in indices]
        elapsed = 0.0
        k = 0
        while True:
            acc = self._fall_acceleration(indices, zs, vzs)
            if np.max(np.abs(vzs)) < self.scenario.settle_speed \
                    and np.max(np.abs(acc)) < 10.0 * self.scenario.settle_speed:
                break
            if elapsed >= self.scenario.settle_timeout:
                logging.warning(f'slipped robots {indices} still moving after '
                    f'{self.scenario.settle_timeout} s')
                break
            k1z, k1v = vzs, acc
            k2z = vzs + 0.5 * dt * k1v
            k2v = self._fall_acceleration(indices, zs + 0.5 * dt * k1z, k2z)
            k3z = vzs + 0.5 * dt * k2v
            k3v = self._fall_acceleration(indices, zs + 0.5 * dt * k2z, k3z)
            k4z = vzs + dt * k3v
            k4v = self._fall_acceleration(indices, zs + dt * k3z, k4z)
            zs = zs + dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
            vzs = vzs + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            np.minimum(lowest, zs, out=lowest)

            elapsed += dt
            self.time += dt
            k += 1
            for j, i in enumerate(indices):
                position = self.states[i].position.copy()
                position[2] = zs[j]
                self.states[i] = replace(self.states[i], position=position,
                    velocity=np.array([0.0, 0.0, vzs[j]]))
            self._track_lowest()
            if k % self.scenario.log_every == 0:
                self._record()

        hang = hang_heights(self.tethers, indices, self._positions(), self.body, self.params.mass)
        for j, i in enumerate(indices):
            if lowest[j] < arrest[j] - 1e-3:
                logging.warning(f'robot {i} fell to {lowest[j]:.4f} m, below its arrest bound '
                    f'{arrest[j]:.4f} m')
            position = self.states[i].position.copy()
            position[2] = hang[j]
            self.states[i] = replace(self.states[i], position=position, velocity=np.zeros(3),
                angular_velocity=np.zeros(3), mode=Mode.SLIPPED)
            self.log.add_event(self.time, i, cycle, EventKind.SLIP, launch_z=launch[i],
                slip_z=float(slip_z[j]), lowest_z=float(lowest[j]), hang_z=float(hang[j]),
                arrest_z=arrest[j])
        self._record()

    def _check_anchored(self, cycle):
        forces, self.hub = robot_tether_forces(self.tethers, self._positions(), hub_start=self.hub)
        gravity = np.array([0.0, 0.0, -self.weight])
        for i, state in enumerate(self.states):
            if state.mode != Mode.ANCHORED:
                continue
            verdict = check_equilibrium(self.grips[i], gravity, forces[i],
                strict=self.scenario.strict_equilibrium)
            if verdict == Equilibrium.SLIPS:
                load = float(np.linalg.norm(gravity + forces[i]))
                logging.warning(f'anchored robot {i} cannot hold {load:.2f} N '
                    f'with {self.grips[i].total_capacity:.2f} N of grip')
                self._stop(ClimbStatus.FAILED, robot=i, cycle=cycle, load=load)

    # gait

    def _book(self, i, before, recovery=False):
        self.log.propellant_used[i] += before - self.states[i].propellant
        if recovery:
            self.log.recovery_hops[i] += 1
        else:
            self.log.hops[i] += 1

    def _shoot(self, i, aim):
        """Plan whose flight, tether pull included, lands within tolerance of
            `aim`; the commanded displacement is corrected by the miss.
        """
        state = self.states[i]
        command = aim - state.position
        for _ in range(8):
            plan = plan_hop(state, self.params, self.body, command, 'vertical')
            landed = self._fly([i], [plan], sandbox=True)[i].position
            miss = aim - landed
            if np.linalg.norm(miss) < SHOOTING_TOLERANCE:
                return plan
            command = command + miss
        logging.warning(f'recovery hop of robot {i} still misses by {np.linalg.norm(miss):.4f} m')
        return plan

    def _miss(self, i, target):
        return float(np.linalg.norm(self.states[i].position - target))

    def _recover(self, i, target, cycle, launch):
        reach = 0.9 * max_reach(self.params, self.body)
        for attempt in range(1, self.scenario.retry_limit + 1):
            position = self.states[i].position
            aim = target
            rise = target[2] - position[2]
            if rise > reach:
                aim = position + (target - position) * (reach / rise)
            try:
                plan = self._shoot(i, aim)
            except PlanningError as err:
                logging.warning(f'robot {i} cannot re-hop: {err}')
                self._stop(ClimbStatus.PARTIAL, robot=i, cycle=cycle, reason=str(err))

            self.log.add_event(self.time, i, cycle, EventKind.HOP_START, attempt=attempt,
                recovery=True)
            before = self.states[i].propellant
            self._fly([i], [plan])
            self._book(i, before, recovery=True)

            if self._land(i, cycle):
                if self._miss(i, target) <= LANDING_TOLERANCE:
                    self.log.add_event(self.time, i, cycle, EventKind.RECOVERED, attempts=attempt)
                    return
                continue
            self._settle([i], cycle, {i: launch})
            self._check_anchored(cycle)

        self._stop(ClimbStatus.PARTIAL, robot=i, cycle=cycle,
            reason=f'no grip after {self.scenario.retry_limit} re-hops')

    def _hop_batch(self, batch, cycle):
        rise = np.array([0.0, 0.0, self.scenario.hop_distance])
        targets = {i: self.states[i].position + rise for i in batch}
        launch = {i: float(self.states[i].position[2]) for i in batch}
        for i in batch:
            self.log.add_event(self.time, i, cycle, EventKind.HOP_START)

        if self.scenario.hop_distance == 0.0:
            for i in batch:
                self.log.add_event(self.time, i, cycle, EventKind.GRIP_OK,
                    capacity=self.grips[i].total_capacity, engaged=self.grips[i].engaged_count)
            return

        try:
            plans = [plan_hop(self.states[i], self.params, self.body, rise) for i in batch]
        except PlanningError as err:
            logging.warning(f'hop planning failed: {err}')
            self._stop(ClimbStatus.PARTIAL, cycle=cycle, reason=str(err))

        before = {i: self.states[i].propellant for i in batch}
        for i in batch:
            self.grips[i] = GripState.empty(self.grip_model.band)
        self._fly(list(batch), plans)
        for i in batch:
            self._book(i, before[i])

        failed = [i for i in batch if not self._land(i, cycle)]
        if failed:
            self._settle(failed, cycle, launch)
            self._check_anchored(cycle)
            for i in failed:
                self._recover(i, targets[i], cycle, launch[i])
        for i in batch:
            miss = self._miss(i, targets[i])
            if i in failed or miss <= LANDING_TOLERANCE:
                continue
            logging.warning(f'robot {i} landed {miss:.4f} m from its target')
            self.log.add_event(self.time, i, cycle, EventKind.OFF_TARGET, landing_error=miss)
            self._recover(i, targets[i], cycle, launch[i])
        self._check_anchored(cycle)

    def run(self):
        logging.info(f'Climbing {self.cycles} cycles with {self.scenario.robot_count} robots...')
        self._record()
        try:
            self._check_anchored(0)
            for cycle in range(self.cycles):
                for batch in self.scenario.batches:
                    self._hop_batch(batch, cycle)
                self.log.cycles_completed += 1
                self._record()
                self.log.boundaries.append(self.time)
        except _Stop:
            pass
        if self.log.status == ClimbStatus.COMPLETED and (self.log.events_of(EventKind.GRIP_FAIL)
                or self.log.events_of(EventKind.OFF_TARGET)):
            self.log.status = ClimbStatus.RECOVERED
        logging.info(f'\tstatus: {self.log.status.value}')
        return self.log


def run_climb(scenario, terrain, grip_model, tethers, body, cycles):
    """Runs the climbing gait for `cycles` full cycles.

        Args:
            scenario (ClimbScenario): robots, gait and injected failures
            terrain: a TerrainPatch or a list of Asperity to grip on
            grip_model (GripModel): how grip events are sampled
            tethers (TetherSystem): tether network over the robots
            body (Body): gravity
            cycles (int): gait cycles to run
        Returns
            ClimbLog
    """
    return _Climb(scenario, terrain, grip_model, tethers, body, cycles).run()


@dataclass(frozen=True)
class ClimbRun:
    """The inputs of one climb, kept together so the run can be replayed
        with changes.
    """
    scenario: ClimbScenario
    terrain: object
    grip_model: GripModel
    tethers: object
    body: object
    cycles: int = 1

    def run(self):
        return run_climb(self.scenario, self.terrain, self.grip_model, self.tethers, self.body,
            self.cycles)


def inject_failure(run, robot_index, cycle_index):
    """Replays `run` with the first landing of `robot_index` in
        `cycle_index` forced to miss its grip.
    """
    scenario = run.scenario
    if not 0 <= robot_index < scenario.robot_count:
        raise ParameterDomainError(f'robot index {robot_index} out of range')
    if not 0 <= cycle_index < run.cycles:
        raise ParameterDomainError(f'cycle index {cycle_index} out of range')
    failures = tuple(scenario.failures) + ((robot_index, cycle_index),)
    return replace(run, scenario=replace(scenario, failures=failures)).run()
