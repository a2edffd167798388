"""Microspine engagement against asperities and the grip capacity of a spine
array.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ParameterDomainError
from .rng import as_generator

# per-contact load a single engaged spine sustains in climbing, N
CAPACITY_BAND = (1.0, 2.0)


@dataclass(frozen=True)
class SpineSpec:
    tip_radius: float = 18.5e-6
    shaft_diameter: float = 250e-6
    load_angle: float = math.radians(5.0)
    friction_coeff: float = 0.2
    tensile_strength: float = 1.5e9
    elastic_modulus: float = 200e9
    # overrides the material constant of the load formula when set
    load_constant: float = None

    def validate(self):
        for name in ('tip_radius', 'shaft_diameter', 'friction_coeff', 'tensile_strength',
                'elastic_modulus'):
            if not getattr(self, name) > 0.0:
                raise ParameterDomainError(f'{name} must be positive, got {getattr(self, name)}')
        if not 0.0 < self.load_angle < math.pi / 2:
            raise ParameterDomainError(f'load_angle must lie in (0, pi/2), got {self.load_angle}')
        if self.load_constant is not None and not self.load_constant > 0.0:
            raise ParameterDomainError(f'load_constant must be positive, got {self.load_constant}')


@dataclass(frozen=True)
class SpineArray:
    spines: tuple
    area_density: float = 4.0e4

    def __post_init__(self):
        if len(self.spines) == 0:
            raise ParameterDomainError('a spine array needs at least one spine')

    @property
    def tip_radii(self):
        return np.array([s.tip_radius for s in self.spines])


@dataclass(frozen=True)
class GripState:
    engaged_count: int
    per_contact_capacity: tuple
    total_capacity: float
    band: tuple = CAPACITY_BAND

    def __post_init__(self):
        assert self.engaged_count == len(self.per_contact_capacity), \
            'engaged_count must match the number of contacts'
        assert math.isclose(self.total_capacity, math.fsum(self.per_contact_capacity),
            rel_tol=1e-12, abs_tol=1e-12), 'total_capacity must be the sum of the contacts'
        lo, hi = self.band
        for c in self.per_contact_capacity:
            if not lo <= c <= hi:
                raise ParameterDomainError(f'contact capacity {c} N outside band [{lo}, {hi}]')

    @classmethod
    def from_contacts(cls, capacities, band=CAPACITY_BAND):
        capacities = tuple(float(c) for c in capacities)
        return cls(len(capacities), capacities, math.fsum(capacities), tuple(band))

    @classmethod
    def empty(cls, band=CAPACITY_BAND):
        return cls(0, (), 0.0, tuple(band))

    def to_dict(self):
        return {
            'engaged_count': self.engaged_count,
            'per_contact_capacity': list(self.per_contact_capacity),
            'total_capacity': self.total_capacity,
        }


def make_spine_array(count, min_tip=12e-6, max_tip=25e-6, template=None, area_density=4.0e4):
    """Spine array whose tip radii are spread evenly over [min_tip, max_tip]."""
    if count < 1:
        raise ParameterDomainError(f'spine count must be positive, got {count}')
    if not 0.0 < min_tip <= max_tip:
        raise ParameterDomainError(f'need 0 < min_tip <= max_tip, got {min_tip}, {max_tip}')
    template = template or SpineSpec()
    radii = np.linspace(min_tip, max_tip, count)
    return SpineArray(tuple(replace(template, tip_radius=float(r)) for r in radii), area_density)


def theta_min(spec):
    """Smallest asperity normal angle a spine can hold on: theta_load +
        arccot(mu).
    """
    if spec.friction_coeff <= 0.0:
        raise ParameterDomainError(f'friction_coeff must be positive, got {spec.friction_coeff}')
    return spec.load_angle + math.atan2(1.0, spec.friction_coeff)


def effective_radius(spine_radius, asperity_radius):
    if spine_radius <= 0.0 or asperity_radius <= 0.0:
        raise ParameterDomainError('radii must be positive')
    return 1.0 / (1.0 / spine_radius + 1.0 / asperity_radius)


def load_constant(spec):
    if spec.load_constant is not None:
        return spec.load_constant
    return (math.pi * spec.tensile_strength / (1.0 - 2.0 * spec.friction_coeff)) ** 3 \
        / (2.0 * spec.elastic_modulus ** 2)


def max_spine_load(spec, asperity, band=None):
    """Largest load one spine holds on one asperity, kappa * R^2.

        Args:
            spec (SpineSpec): the spine
            asperity (Asperity): the bump it hooks
            band (tuple): optional (low, high) clamp used by climb simulations
        Returns
            Force in N
    """
    radius = effective_radius(spec.tip_radius, asperity.tip_radius)
    load = load_constant(spec) * radius ** 2
    if band is not None:
        load = min(max(load, band[0]), band[1])
    return load


def can_engage(spec, asperity):
    return asperity.tip_radius >= spec.tip_radius and asperity.normal_angle >= theta_min(spec)


def engagement_probability(spec, asperities):
    """Fraction of the asperity population the spine can engage."""
    if len(asperities) == 0:
        return 0.0
    return sum(can_engage(spec, a) for a in asperities) / len(asperities)


@dataclass(frozen=True)
class GripModel:
    """How grip events are sampled during a climb."""
    spine: SpineSpec = field(default_factory=SpineSpec)
    min_tip: float = 12e-6
    max_tip: float = 25e-6
    band: tuple = CAPACITY_BAND
    # every engaged contact carries exactly this load when set
    fixed_capacity: float = None
    # contact load from the asperity geometry, clamped into the band
    terrain_coupled: bool = False

    def validate(self):
        self.spine.validate()
        lo, hi = self.band
        if not 0.0 < lo <= hi:
            raise ParameterDomainError(f'capacity band must satisfy 0 < low <= high, got {self.band}')
        if self.fixed_capacity is not None and not lo <= self.fixed_capacity <= hi:
            raise ParameterDomainError(f'fixed_capacity {self.fixed_capacity} outside band {self.band}')

    def array(self, count):
        return make_spine_array(count, self.min_tip, self.max_tip, self.spine)

    def sample(self, array, asperities, rng):
        return sample_grip(array, asperities, rng, band=self.band,
            fixed_capacity=self.fixed_capacity, terrain_coupled=self.terrain_coupled)


def sample_grip(array, asperities, rng, band=CAPACITY_BAND, fixed_capacity=None,
        terrain_coupled=False):
    """One grip event: every spine is dragged onto a randomly drawn asperity
        and engages when the geometry allows it. Engaged contacts draw their
        load capacity uniformly from `band` unless a fixed capacity is given.
    """
    gen = as_generator(rng)
    if len(asperities) == 0:
        return GripState.empty(band)

    drawn = gen.integers(len(asperities), size=len(array.spines))
    engaged = [
        (spine, asperities[k]) for spine, k in zip(array.spines, drawn)
        if can_engage(spine, asperities[k])
    ]
    if fixed_capacity is not None:
        capacities = [fixed_capacity] * len(engaged)
    elif terrain_coupled:
        capacities = [max_spine_load(s, a, band) for s, a in engaged]
    else:
        capacities = gen.uniform(band[0], band[1], size=len(engaged))
    return GripState.from_contacts(capacities, band)
