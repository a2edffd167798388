"""Scenario files.

A scenario is a YAML mapping whose sections mirror the frozen dataclasses
below. Every key is checked against the dataclass fields so a typo in a
physics parameter fails loudly instead of silently falling back to a
default.
"""
import dataclasses
import hashlib
import json
import logging
import math
import re
from dataclasses import dataclass, field

import yaml

from . import __version__
from .climber import DEFAULT_POSITIONS, ClimbScenario
from .dynamics import RobotParams, calibrated, get_body
from .exceptions import ConfigError, ParameterDomainError
from .grip import GripModel, SpineSpec
from .perception import stereo_pair
from .study import TradeStudyConfig
from .terrain import TerrainParams, nyquist_max_freq_index
from .tether import HUB, TetherEdge, TetherSpec, TetherSystem, robot_name


@dataclass(frozen=True)
class TerrainSection:
    fractal_dim: float = 2.5
    roughness_amp: float = 1e-8
    sample_length: float = 1e-3
    gamma_freq: float = 1.5
    ridge_count: int = 10
    # null picks the finest frequency the lattice resolves
    max_freq_index: int = None
    extent: float = 1e-3
    spacing: float = 1e-5

    def params(self, seed):
        max_freq = self.max_freq_index
        if max_freq is None:
            max_freq = nyquist_max_freq_index(self.sample_length, self.spacing, self.gamma_freq)
        return TerrainParams(self.fractal_dim, self.roughness_amp, self.sample_length,
            self.gamma_freq, self.ridge_count, max_freq, seed)


@dataclass(frozen=True)
class BodySection:
    name: str = 'Mars'
    gravity: float = None

    def body(self):
        return get_body(self.name, self.gravity)


@dataclass(frozen=True)
class RobotSection:
    mass: float = 3.0
    diameter: float = 0.3
    # null calibrates against hop.datum
    thrust: float = None
    specific_impulse: float = 300.0
    kp: tuple = (0.2, 0.2, 0.2)
    kd: tuple = (0.147, 0.147, 0.147)
    propellant_budget: float = 1.0
    torque_limit: float = 0.1
    hop_time: float = 1.5
    dt: float = 1e-3

    def params(self):
        return RobotParams(self.mass, self.diameter, self.thrust, self.specific_impulse,
            tuple(self.kp), tuple(self.kd), self.propellant_budget, self.torque_limit,
            self.hop_time, self.dt)


@dataclass(frozen=True)
class SpineSection:
    tip_radius: float = 18.5e-6
    shaft_diameter: float = 250e-6
    load_angle_deg: float = 5.0
    friction_coeff: float = 0.2
    tensile_strength: float = 1.5e9
    elastic_modulus: float = 200e9
    load_constant: float = None

    def spec(self):
        return SpineSpec(self.tip_radius, self.shaft_diameter, math.radians(self.load_angle_deg),
            self.friction_coeff, self.tensile_strength, self.elastic_modulus, self.load_constant)


@dataclass(frozen=True)
class GripSection:
    spine: SpineSection = field(default_factory=SpineSection)
    min_tip: float = 12e-6
    max_tip: float = 25e-6
    band: tuple = (1.0, 2.0)
    fixed_capacity: float = None
    terrain_coupled: bool = False

    def model(self):
        return GripModel(self.spine.spec(), self.min_tip, self.max_tip, tuple(self.band),
            self.fixed_capacity, self.terrain_coupled)


@dataclass(frozen=True)
class TetherSection:
    stiffness: float = 200.0
    rest_length: float = 1.75
    damping: float = 25.0
    # pairs of node names; null joins every robot to the hub
    edges: tuple = None

    def system(self, robot_count):
        spec = TetherSpec(self.stiffness, self.rest_length, self.damping)
        if self.edges is None:
            return TetherSystem.x_configuration(robot_count, spec)
        for edge in self.edges:
            if not isinstance(edge, tuple) or len(edge) != 2:
                raise ParameterDomainError(f'tether edge {edge!r} must name two nodes')
        robots = tuple(robot_name(i) for i in range(robot_count))
        return TetherSystem(robots, tuple(TetherEdge(a, b, spec) for a, b in self.edges))


@dataclass(frozen=True)
class ClimbSection:
    robot_count: int = 4
    hop_batch: int = 1
    hop_distance: float = 1.27
    initial_positions: tuple = DEFAULT_POSITIONS
    approach_angle: float = 55.0
    spines_per_robot: int = 60
    cycles: int = 2
    propellant_per_hop: float = 0.005
    gait_order: tuple = None
    retry_limit: int = 5
    settle_speed: float = 1e-3
    settle_timeout: float = 30.0
    log_every: int = 10
    # [robot, cycle] pairs, 0-based
    failures: tuple = ()
    strict_equilibrium: bool = False

    def scenario(self, robot, seed):
        return ClimbScenario(
            robot_count=self.robot_count,
            hop_batch=self.hop_batch,
            hop_distance=self.hop_distance,
            initial_positions=tuple(tuple(p) for p in self.initial_positions),
            approach_angle=self.approach_angle,
            spines_per_robot=self.spines_per_robot,
            rng_seed=seed,
            robot=robot,
            propellant_per_hop=self.propellant_per_hop,
            gait_order=self.gait_order,
            retry_limit=self.retry_limit,
            settle_speed=self.settle_speed,
            settle_timeout=self.settle_timeout,
            log_every=self.log_every,
            failures=tuple(tuple(f) for f in self.failures),
            strict_equilibrium=self.strict_equilibrium,
        )


@dataclass(frozen=True)
class DatumSection:
    body: str = 'Mars'
    distance: float = 1.27
    hop_time: float = 1.5
    propellant: float = 0.005


@dataclass(frozen=True)
class HopSection:
    surface: str = 'vertical'
    displacement: tuple = (0.0, 0.0, 1.27)
    # fixed uses `displacement`; perceived picks a triangulated candidate
    target: str = 'fixed'
    record_every: int = 10
    sweep_bodies: tuple = ('Phobos', 'Ceres', 'Moon', 'Mars')
    sweep_propellant: float = 0.005
    datum: DatumSection = field(default_factory=DatumSection)


@dataclass(frozen=True)
class StudySection:
    trials: int = 10_000
    min_spines: int = 1
    max_spines: int = 30
    # n_failed -> team sizes to sweep
    failure_sizes: dict = field(default_factory=lambda: {1: [2, 3, 4, 5, 6], 2: [3, 4, 5, 6]})
    hop_batches: tuple = (1, 2)
    system_sizes: tuple = (2, 3, 4, 5, 6, 7, 8)
    per_contact_load: float = 1.5
    propellant_budget: float = 1000.0
    propellant_per_hop: float = 5.0
    instrument_range: float = 0.75
    robot_separation: float = 1.16
    overlap_count: int = None
    threads: int = 1

    def trade_config(self, hop_batch, robot, body, hop_distance):
        return TradeStudyConfig(
            robot_mass=robot.mass,
            gravity=body.gravity,
            per_contact_load=self.per_contact_load,
            hop_distance=hop_distance,
            hop_time=robot.hop_time,
            propellant_budget=self.propellant_budget,
            propellant_per_hop=self.propellant_per_hop,
            instrument_range=self.instrument_range,
            robot_separation=self.robot_separation,
            overlap_count=self.overlap_count,
            system_sizes=tuple(self.system_sizes),
            hop_batch=hop_batch,
        )


@dataclass(frozen=True)
class PerceptionSection:
    focal: float = 800.0
    baseline: float = 0.2
    cx: float = 320.0
    cy: float = 240.0
    noise_px: float = 0.1
    # world points the cameras look for grips at
    candidates: tuple = ()
    # null limits targets to the thruster's reach
    max_range: float = None

    def cameras(self, position):
        return stereo_pair(self.focal, self.baseline, self.cx, self.cy, position)


@dataclass(frozen=True)
class OutputSection:
    dir: str = 'outputs'


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    terrain: TerrainSection = field(default_factory=TerrainSection)
    body: BodySection = field(default_factory=BodySection)
    robot: RobotSection = field(default_factory=RobotSection)
    grip: GripSection = field(default_factory=GripSection)
    tethers: TetherSection = field(default_factory=TetherSection)
    climb: ClimbSection = field(default_factory=ClimbSection)
    hop: HopSection = field(default_factory=HopSection)
    study: StudySection = field(default_factory=StudySection)
    perception: PerceptionSection = None
    output: OutputSection = field(default_factory=OutputSection)
    digest: str = field(default='', metadata={'internal': True})

    def body_obj(self):
        return self.body.body()

    def robot_params(self):
        """Robot parameters with the thrust calibrated against the datum when
            the scenario leaves it open.
        """
        params = self.robot.params()
        if params.thrust_magnitude is None:
            datum = self.hop.datum
            params = calibrated(params, get_body(datum.body), datum.distance, datum.hop_time,
                datum.propellant)
        return params


def _freeze(value):
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    return value


def _coerce(value, kind, path):
    if value is None:
        return None
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f'{path}: expected true/false, got {value!r}')
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f'{path}: expected an integer, got {value!r}')
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f'{path}: expected a number, got {value!r}')
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f'{path}: expected a string, got {value!r}')
        return value
    if kind is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f'{path}: expected a list, got {value!r}')
        return _freeze(list(value))
    if kind is dict:
        if not isinstance(value, dict):
            raise ConfigError(f'{path}: expected a mapping, got {value!r}')
        return value
    if dataclasses.is_dataclass(kind):
        return _build(kind, value, path)
    raise ConfigError(f'{path}: unsupported field type {kind}')


def _build(cls, data, path):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f'{path or "<root>"}: expected a mapping, got {data!r}')
    fields = {f.name: f for f in dataclasses.fields(cls) if not f.metadata.get('internal')}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        where = f'{path}.' if path else ''
        raise ConfigError(f'unknown key(s): {", ".join(where + str(k) for k in unknown)}')
    values = {}
    for name, f in fields.items():
        if name in data:
            values[name] = _coerce(data[name], f.type, f'{path}.{name}' if path else name)
    return cls(**values)


def config_hash(raw):
    canonical = json.dumps(raw, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()


def parse_config(raw, seed=None, trials=None):
    """Builds and validates a ScenarioConfig from a parsed mapping, applying
        command-line overrides first.
    """
    raw = dict(raw or {})
    if seed is not None:
        raw['seed'] = seed
    if trials is not None:
        raw['study'] = dict(raw.get('study') or {}, trials=trials)
    config = _build(ScenarioConfig, raw, '')
    config = dataclasses.replace(config, digest=config_hash(raw))
    validate_config(config)
    return config


class ConfigLoader(yaml.SafeLoader):
    """SafeLoader that also reads exponent floats without a dot or sign (1e-5)."""


ConfigLoader.add_implicit_resolver(
    'tag:yaml.org,2002:float',
    re.compile(r'''^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$''', re.X),
    list('-+0123456789.'))


def load_config(path, seed=None, trials=None):
    logging.info(f'Reading config {path}...')
    try:
        with open(path, 'r') as f:
            raw = yaml.load(f, Loader=ConfigLoader)
    except yaml.YAMLError as err:
        raise ConfigError(f'{path}: not valid YAML: {err}')
    return parse_config(raw, seed, trials)


def validate_config(config):
    """Runs every domain check the simulations would run, up front."""
    try:
        if isinstance(config.seed, bool) or not isinstance(config.seed, int) or config.seed < 0:
            raise ParameterDomainError(f'seed must be a non-negative integer, got {config.seed}')

        terrain = config.terrain
        terrain.params(config.seed).validate()
        if not terrain.extent > terrain.spacing > 0.0:
            raise ParameterDomainError('terrain needs extent > spacing > 0')

        body = config.body_obj()
        robot = config.robot.params()
        robot.validate(need_thrust=False)
        config.grip.model().validate()

        climb = config.climb
        if climb.cycles < 1:
            raise ParameterDomainError(f'climb.cycles must be at least 1, got {climb.cycles}')
        climb.scenario(robot, config.seed).validate()
        config.tethers.system(climb.robot_count).validate()

        hop = config.hop
        if hop.surface not in ('vertical', 'horizontal'):
            raise ParameterDomainError(f'hop.surface must be vertical or horizontal, got {hop.surface}')
        if hop.target not in ('fixed', 'perceived'):
            raise ParameterDomainError(f'hop.target must be fixed or perceived, got {hop.target}')
        if len(hop.displacement) != 3:
            raise ParameterDomainError('hop.displacement must be a 3-vector')
        if hop.record_every < 1:
            raise ParameterDomainError('hop.record_every must be positive')
        if hop.target == 'perceived' and (config.perception is None or not config.perception.candidates):
            raise ParameterDomainError('hop.target perceived needs perception.candidates')
        for name in hop.sweep_bodies:
            get_body(name)
        datum = hop.datum
        get_body(datum.body)
        for name in ('distance', 'hop_time', 'propellant'):
            if not getattr(datum, name) > 0.0:
                raise ParameterDomainError(f'hop.datum.{name} must be positive')

        study = config.study
        if study.trials < 1:
            raise ParameterDomainError(f'study.trials must be at least 1, got {study.trials}')
        if not 1 <= study.min_spines <= study.max_spines:
            raise ParameterDomainError('study needs 1 <= min_spines <= max_spines')
        if study.threads < 1:
            raise ParameterDomainError('study.threads must be positive')
        for n_failed, sizes in study.failure_sizes.items():
            if not isinstance(n_failed, int) or n_failed < 0:
                raise ParameterDomainError(f'study.failure_sizes key {n_failed!r} must be a count')
            for size in sizes:
                if not isinstance(size, int) or size <= n_failed:
                    raise ParameterDomainError(
                        f'study.failure_sizes: team of {size} cannot lose {n_failed} robots')
        for n in study.hop_batches:
            study.trade_config(n, robot, body, climb.hop_distance).validate()

        if config.perception is not None:
            perception = config.perception
            perception.cameras((0.0, 0.0, 0.0))
            for point in perception.candidates:
                if len(point) != 3:
                    raise ParameterDomainError('perception.candidates must be 3-vectors')
    except ParameterDomainError as err:
        raise ConfigError(str(err))
    return config


def provenance(config):
    return {
        'tool': 'tethered-climb',
        'version': __version__,
        'config_sha256': config.digest,
        'seed': config.seed,
    }
