"""Spring-tether network between robots, joined through a massless hub, and
the per-robot grip equilibrium check.

Positions are world coordinates with z up-slope on the wall plane y = 0;
the wall's outward normal is -y.
"""
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq, root

from .exceptions import ConvergenceError, ParameterDomainError

HUB = 'hub'
WALL_NORMAL = np.array([0.0, -1.0, 0.0])
# time step of the finite difference that gives the hub velocity, s
HUB_RATE_STEP = 1e-3


@dataclass(frozen=True)
class TetherSpec:
    stiffness: float = 200.0
    rest_length: float = 1.06
    damping: float = 0.0

    def validate(self):
        if not self.stiffness > 0.0:
            raise ParameterDomainError(f'tether stiffness must be positive, got {self.stiffness}')
        if not self.rest_length > 0.0:
            raise ParameterDomainError(f'tether rest_length must be positive, got {self.rest_length}')
        if self.damping < 0.0:
            raise ParameterDomainError(f'tether damping cannot be negative, got {self.damping}')


@dataclass(frozen=True)
class TetherEdge:
    a: str
    b: str
    spec: TetherSpec = field(default_factory=TetherSpec)


def robot_name(index):
    return f'robot_{index}'


@dataclass(frozen=True)
class TetherSystem:
    robots: tuple
    edges: tuple

    def validate(self):
        nodes = set(self.robots) | {HUB}
        if len(set(self.robots)) != len(self.robots):
            raise ParameterDomainError('robot node names must be unique')
        if not self.edges:
            raise ParameterDomainError('a tether system needs at least one edge')
        for edge in self.edges:
            edge.spec.validate()
            for end in (edge.a, edge.b):
                if end not in nodes:
                    raise ParameterDomainError(f'tether edge references unknown node {end!r}')
            if edge.a == edge.b:
                raise ParameterDomainError(f'tether edge {edge.a}-{edge.b} is a loop')
        if self.has_hub and len(self.hub_edges) < 2:
            raise ParameterDomainError('the hub needs at least two tethers')

        # connectivity over the nodes that appear in the graph
        adjacency = {n: set() for n in self.nodes}
        for edge in self.edges:
            adjacency[edge.a].add(edge.b)
            adjacency[edge.b].add(edge.a)
        start = self.robots[0]
        seen = {start}
        queue = deque([start])
        while queue:
            for nxt in adjacency[queue.popleft()]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        if seen != set(self.nodes):
            raise ParameterDomainError(f'tether graph is not connected: {sorted(set(self.nodes) - seen)}')

    @property
    def nodes(self):
        return list(self.robots) + ([HUB] if self.has_hub else [])

    @property
    def has_hub(self):
        return any(HUB in (e.a, e.b) for e in self.edges)

    @property
    def hub_edges(self):
        return [e for e in self.edges if HUB in (e.a, e.b)]

    def index(self, name):
        return self.robots.index(name)

    @classmethod
    def x_configuration(cls, robot_count, spec=None):
        """Every robot tethered to a common hub."""
        spec = spec or TetherSpec()
        robots = tuple(robot_name(i) for i in range(robot_count))
        return cls(robots, tuple(TetherEdge(r, HUB, spec) for r in robots))


class Equilibrium(Enum):
    HOLDS = 'HOLDS'
    SLIPS = 'SLIPS'


def tether_force(spec, end_a, end_b, rel_vel=None):
    """Force the tether exerts on end A.

        Args:
            spec (TetherSpec): tether properties
            end_a, end_b: endpoint positions in m
            rel_vel: velocity of B relative to A in m/s, for damping
        Returns
            3-vector in N pointing from A toward B, zero when slack
    """
    separation = np.asarray(end_b, dtype=float) - np.asarray(end_a, dtype=float)
    length = float(np.linalg.norm(separation))
    if length == 0.0:
        raise ParameterDomainError('tether endpoints coincide')
    if length <= spec.rest_length:
        return np.zeros(3)
    direction = separation / length
    tension = spec.stiffness * (length - spec.rest_length)
    if spec.damping and rel_vel is not None:
        tension += spec.damping * float(np.dot(rel_vel, direction))
    return max(tension, 0.0) * direction


def _node_position(name, system, positions, hub):
    return hub if name == HUB else positions[system.index(name)]


def hub_force(system, hub, positions):
    """Net tether force on the hub."""
    total = np.zeros(3)
    for edge in system.hub_edges:
        other = edge.b if edge.a == HUB else edge.a
        total += tether_force(edge.spec, hub, positions[system.index(other)])
    return total


def _hub_jacobian(system, hub, positions):
    jac = np.zeros((3, 3))
    for edge in system.hub_edges:
        other = edge.b if edge.a == HUB else edge.a
        separation = positions[system.index(other)] - hub
        length = float(np.linalg.norm(separation))
        if length <= edge.spec.rest_length:
            continue
        n = separation / length
        outer = np.outer(n, n)
        ratio = edge.spec.rest_length / length
        jac -= edge.spec.stiffness * (outer + (1.0 - ratio) * (np.eye(3) - outer))
    return jac


def solve_hub(system, positions, start=None, tol=1e-6, max_iter=100):
    """Hub position where the hub tethers balance.

        Damped Newton from `start` (the centroid of the hub's neighbours by
        default). When every hub tether is slack at the start that point is
        returned as is.
    """
    positions = np.asarray(positions, dtype=float)
    neighbours = [
        positions[system.index(e.b if e.a == HUB else e.a)] for e in system.hub_edges
    ]
    if len(neighbours) < 2:
        raise ParameterDomainError('the hub needs at least two tethers')
    hub = np.mean(neighbours, axis=0) if start is None else np.asarray(start, dtype=float).copy()

    residual = float(np.linalg.norm(hub_force(system, hub, positions)))
    for iteration in range(max_iter):
        if residual < tol:
            return hub
        force = hub_force(system, hub, positions)
        newton = -np.linalg.solve(_hub_jacobian(system, hub, positions), force)
        scale = 1.0
        while True:
            trial = hub + scale * newton
            trial_residual = float(np.linalg.norm(hub_force(system, trial, positions)))
            if trial_residual < residual or scale < 1e-6:
                break
            scale *= 0.5
        hub, residual = trial, trial_residual

    if residual < tol:
        return hub
    raise ConvergenceError(f'hub solve stopped at residual {residual:.3e} N after {max_iter} iterations',
        residual=residual, iterations=max_iter)


def hub_velocity(system, positions, velocities, hub, step=HUB_RATE_STEP):
    """Rate at which the hub's balance point moves while the robots move
        with `velocities`; zero while the hub tethers stay slack.
    """
    moved = solve_hub(system, positions + step * velocities, hub)
    return (moved - hub) / step


def robot_tether_forces(system, positions, velocities=None, hub_start=None):
    """Tether force on every robot from one hub solve.

        The hub carries no mass, so it follows its spring balance; hub
        tethers are damped against the rate of that balance point.

        Returns
            (forces, hub): an (N, 3) array in N and the hub position (None
            without a hub)
    """
    positions = np.asarray(positions, dtype=float)
    velocities = np.zeros_like(positions) if velocities is None else np.asarray(velocities, dtype=float)
    hub = solve_hub(system, positions, hub_start) if system.has_hub else None
    hub_rate = np.zeros(3)
    if hub is not None and np.any(velocities) and any(e.spec.damping for e in system.hub_edges):
        hub_rate = hub_velocity(system, positions, velocities, hub)

    forces = np.zeros_like(positions)
    for edge in system.edges:
        pos_a = _node_position(edge.a, system, positions, hub)
        pos_b = _node_position(edge.b, system, positions, hub)
        vel_a = hub_rate if edge.a == HUB else velocities[system.index(edge.a)]
        vel_b = hub_rate if edge.b == HUB else velocities[system.index(edge.b)]
        if edge.a != HUB:
            forces[system.index(edge.a)] += tether_force(edge.spec, pos_a, pos_b, vel_b - vel_a)
        if edge.b != HUB:
            forces[system.index(edge.b)] += tether_force(edge.spec, pos_b, pos_a, vel_a - vel_b)
    return forces, hub


def net_robot_force(system, index, positions, body, mass, velocities=None):
    """Gravity and summed tether force on one robot.

        Returns
            (F_g, F_s) as 3-vectors in N
    """
    if not 0 <= index < len(system.robots):
        raise ParameterDomainError(f'robot index {index} out of range')
    forces, _ = robot_tether_forces(system, positions, velocities)
    gravity = np.array([0.0, 0.0, -mass * body.gravity])
    return gravity, forces[index]


def check_equilibrium(grip, f_g, f_s, strict=False, wall_normal=WALL_NORMAL, normal_ratio=0.5):
    """Whether the grip holds the load F_g + F_s.

        The default compares the load magnitude with the total capacity,
        boundary included. In strict mode the load is split against the
        wall: its in-plane part must stay within the capacity and its part
        pulling the robot off the wall within `normal_ratio` of it.
    """
    load = np.asarray(f_g, dtype=float) + np.asarray(f_s, dtype=float)
    capacity = grip.total_capacity
    if not strict:
        return Equilibrium.HOLDS if np.linalg.norm(load) <= capacity else Equilibrium.SLIPS
    normal = np.asarray(wall_normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    pull_off = float(np.dot(load, normal))
    tangential = float(np.linalg.norm(load - pull_off * normal))
    if tangential <= capacity and max(pull_off, 0.0) <= normal_ratio * capacity:
        return Equilibrium.HOLDS
    return Equilibrium.SLIPS


def _vertical_pull(system, index, positions, z, hub_start=None):
    trial = np.array(positions, dtype=float)
    trial[index, 2] = z
    forces, _ = robot_tether_forces(system, trial, hub_start=hub_start)
    return forces[index, 2]


def hang_heights(system, indices, positions, body, mass):
    """Heights at which the robots in `indices`, held to their fall lines,
        hang in static balance on the tethers while the rest stay put.

        Returns
            array of heights in m, one per index
    """
    positions = np.array(positions, dtype=float)
    indices = list(indices)
    weight = mass * body.gravity

    def residual(zs):
        trial = positions.copy()
        trial[indices, 2] = zs
        forces, _ = robot_tether_forces(system, trial)
        return forces[indices, 2] - weight

    if len(indices) == 1:
        i = indices[0]
        top = positions[i, 2]
        pull = lambda z: _vertical_pull(system, i, positions, z) - weight
        if pull(top) >= 0.0:
            # already held at or above balance; search upward
            bottom, top = top, top + 0.25
            while pull(top) > 0.0:
                bottom, top = top, top + 0.25
                if top - positions[i, 2] > 100.0:
                    raise ConvergenceError('no hanging balance above the robot')
            return np.array([brentq(pull, bottom, top, xtol=1e-10)])
        bottom = top - 0.25
        while pull(bottom) < 0.0:
            top, bottom = bottom, bottom - 0.25
            if positions[i, 2] - bottom > 100.0:
                raise ConvergenceError('tethers never take the weight of the hanging robot')
        return np.array([brentq(pull, bottom, top, xtol=1e-10)])

    solution = root(residual, positions[indices, 2], method='hybr', options={'xtol': 1e-10})
    if not solution.success:
        raise ConvergenceError(f'hanging balance not found: {solution.message}',
            residual=float(np.max(np.abs(solution.fun))))
    return solution.x


def arrest_height(system, index, positions, body, mass, fall_speed=0.0, resolution=1e-3,
        max_drop=100.0):
    """Lowest height a robot falling down its fall line can reach when the
        tethers store all the energy (no damping). The fall starts at the
        robot's current height with downward speed `fall_speed`.
    """
    positions = np.array(positions, dtype=float)
    start = positions[index, 2]
    kinetic = 0.5 * mass * fall_speed ** 2
    weight = mass * body.gravity
    chunk = 2.0
    depth = 0.0
    work_prev = 0.0
    hub = None
    while depth < max_drop:
        zs = start - (depth + np.arange(0.0, chunk + 0.5 * resolution, resolution))
        pulls = []
        for z in zs:
            trial = positions.copy()
            trial[index, 2] = z
            forces, hub = robot_tether_forces(system, trial, hub_start=hub)
            pulls.append(forces[index, 2])
        pulls = np.array(pulls)
        # energy left after falling: kinetic + weight*drop - tether work
        stored = work_prev + cumulative_trapezoid(pulls, start - zs, initial=0.0)
        energy = kinetic + weight * (start - zs) - stored
        below = np.nonzero(energy < 0.0)[0]
        if len(below):
            k = below[0]
            # linear interpolation between the last positive sample and this one
            frac = energy[k - 1] / (energy[k - 1] - energy[k])
            return float(zs[k - 1] + frac * (zs[k] - zs[k - 1]))
        depth += chunk
        work_prev = stored[-1]
    logging.warning(f'no arrest within {max_drop} m of fall')
    return float(start - max_drop)
