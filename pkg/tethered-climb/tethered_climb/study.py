"""Reliability and sizing studies for tethered climbing teams.

- failure probability of the anchored set against the number of spines per
  robot, by Monte Carlo over per-contact capacities
- trade metrics per team size N and their normalized product fitness
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd
from tqdm import tqdm

from . import rng as streams
from .exceptions import ParameterDomainError

# trials drawn per independent random stream; fixed so results do not depend
# on how the chunks are spread over threads
CHUNK_TRIALS = 10_000

LOWER_IS_BETTER = ('spines', 'time', 'links')
HIGHER_IS_BETTER = ('coverage',)


@dataclass(frozen=True)
class TradeStudyConfig:
    robot_mass: float = 3.0
    gravity: float = 3.71
    per_contact_load: float = 1.5
    hop_distance: float = 1.27
    hop_time: float = 1.5
    propellant_budget: float = 1000.0
    propellant_per_hop: float = 5.0
    instrument_range: float = 0.75
    robot_separation: float = 1.16
    # None counts every pair of robots as overlapping
    overlap_count: int = None
    system_sizes: tuple = (2, 3, 4, 5, 6, 7, 8)
    hop_batch: int = 1

    def validate(self):
        for name in ('robot_mass', 'gravity', 'per_contact_load', 'hop_distance', 'hop_time',
                'propellant_budget', 'propellant_per_hop', 'instrument_range', 'robot_separation'):
            if not getattr(self, name) > 0.0:
                raise ParameterDomainError(f'{name} must be positive, got {getattr(self, name)}')
        if self.overlap_count is not None and self.overlap_count < 0:
            raise ParameterDomainError(f'overlap_count cannot be negative, got {self.overlap_count}')
        if len(self.system_sizes) < 2:
            raise ParameterDomainError('a fitness study needs at least two system sizes')
        if self.hop_batch < 1:
            raise ParameterDomainError('hop_batch must be positive')
        if self.hop_batch >= max(self.system_sizes):
            raise ParameterDomainError(
                f'hop_batch {self.hop_batch} leaves no feasible system size in {self.system_sizes}')

    def overlaps(self, size):
        return math.comb(size, 2) if self.overlap_count is None else self.overlap_count


@dataclass(frozen=True)
class TradeMetrics:
    size: int
    spines: float
    distance: float
    time: float
    coverage: float
    links: int

    @property
    def feasible(self):
        return math.isfinite(self.spines)


@dataclass
class FitnessReport:
    hop_batch: int
    table: pd.DataFrame
    argmax: int
    argmin: list
    assumptions: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            'hop_batch': self.hop_batch,
            'argmax': self.argmax,
            'argmin': self.argmin,
            'assumptions': self.assumptions,
            'systems': self.table.astype(object).where(pd.notnull(self.table), None).to_dict(orient='records'),
        }


def critical_spines_real(size, hop_batch, mass, gravity, per_contact_load=1.5):
    if not size > hop_batch >= 1:
        raise ParameterDomainError(f'need N > n >= 1, got N={size}, n={hop_batch}')
    return size * mass * gravity / (per_contact_load * (size - hop_batch))


def critical_spines(size, hop_batch, mass, gravity, per_contact_load=1.5):
    """Spines each anchored robot needs so the anchored set carries the team,
        floor(N m g / (load (N - n))).
    """
    return int(math.floor(critical_spines_real(size, hop_batch, mass, gravity, per_contact_load)))


def _count_failures(seed_seq, trials, contacts_per_spine, ks, weight, band):
    gen = np.random.Generator(np.random.Philox(seed_seq))
    draws = gen.uniform(band[0], band[1], size=(trials, max(ks) * contacts_per_spine))
    capacity = np.cumsum(draws, axis=1)
    columns = [k * contacts_per_spine - 1 for k in ks]
    return (capacity[:, columns] < weight).sum(axis=0)


def failure_curve(size, n_failed, ks, trials, seed, mass=3.0, gravity=3.71, band=(1.0, 2.0),
        threads=1, progress=False):
    """Failure probability for every spine count in `ks` from one set of
        draws (common random numbers), so the curve is monotone in k.

        The anchored robots hold k contacts each; the team fails when their
        summed capacity is below the total weight N m g.

        Returns
            DataFrame with columns N, n_failed, k, probability, trials
    """
    if trials < 1:
        raise ParameterDomainError(f'trials must be at least 1, got {trials}')
    if not size > n_failed >= 0:
        raise ParameterDomainError(f'need N > n_failed >= 0, got N={size}, n_failed={n_failed}')
    ks = [int(k) for k in ks]
    if not ks or min(ks) < 1:
        raise ParameterDomainError('spine counts must be positive')

    anchored = size - n_failed
    weight = size * mass * gravity
    probability = {}
    random_ks = []
    for k in ks:
        contacts = k * anchored
        if contacts * band[1] < weight:
            probability[k] = 1.0
        elif contacts * band[0] >= weight:
            probability[k] = 0.0
        else:
            random_ks.append(k)

    if random_ks:
        chunks = [CHUNK_TRIALS] * (trials // CHUNK_TRIALS)
        if trials % CHUNK_TRIALS:
            chunks.append(trials % CHUNK_TRIALS)
        base = streams.seed_sequence(seed, f'{streams.STUDY_FAILURE}.{size}.{n_failed}')
        seeds = base.spawn(len(chunks))
        work = lambda args: _count_failures(args[0], args[1], anchored, random_ks, weight, band)
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            counts = list(tqdm(pool.map(work, zip(seeds, chunks)), total=len(chunks),
                desc=f'N={size} n_failed={n_failed}', disable=not progress, leave=False))
        failures = np.sum(counts, axis=0)
        for k, count in zip(random_ks, failures):
            probability[k] = float(count) / trials

    return pd.DataFrame({
        'N': size,
        'n_failed': n_failed,
        'k': ks,
        'probability': [probability[k] for k in ks],
        'trials': trials,
    })


def failure_probability(size, n_failed, spines, trials, seed, mass=3.0, gravity=3.71,
        band=(1.0, 2.0), threads=1):
    """Probability that the anchored robots cannot hold the team."""
    curve = failure_curve(size, n_failed, [spines], trials, seed, mass, gravity, band, threads)
    return float(curve['probability'].iloc[0])


def lens_area(radius, separation):
    """Overlap area of two circles of equal radius."""
    if separation >= 2.0 * radius:
        return 0.0
    return 2.0 * radius ** 2 * math.acos(separation / (2.0 * radius)) \
        - 0.5 * separation * math.sqrt(4.0 * radius ** 2 - separation ** 2)


def trade_metrics(config, size):
    """Spines, distance, time, coverage and link count for a team of `size`.

        Sizes with N <= n cannot keep a robot anchored; their spine metric is
        infinite.
    """
    if size not in config.system_sizes:
        raise ParameterDomainError(f'system size {size} is not part of the study')
    n = config.hop_batch
    spines = critical_spines_real(size, n, config.robot_mass, config.gravity,
        config.per_contact_load) if size > n else math.inf
    hops = config.propellant_budget / config.propellant_per_hop
    r = config.instrument_range
    coverage = size * math.pi * r ** 2 - config.overlaps(size) * lens_area(r, config.robot_separation)
    return TradeMetrics(
        size=size,
        spines=spines,
        distance=hops * config.hop_distance,
        time=hops * config.hop_time * math.ceil(size / n),
        coverage=coverage,
        links=math.comb(size, 2),
    )


def normalize_metric(values, higher_is_better=False):
    """Min-max scaling to [0, 1] with 1 for the best value. A metric that
        does not vary scores 1 everywhere.
    """
    values = np.asarray(values, dtype=float)
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.ones_like(values)
    if higher_is_better:
        return (values - lo) / (hi - lo)
    return (hi - values) / (hi - lo)


def fitness_study(config):
    """Ranks team sizes by the product of their normalized trade metrics.

        Distance does not depend on N and is left out of the product.
        Infeasible sizes score 0 and take no part in the normalization.
    """
    config.validate()
    logging.info(f'Running fitness study for n={config.hop_batch}...')
    rows = [asdict(trade_metrics(config, size)) for size in config.system_sizes]
    table = pd.DataFrame(rows)
    table['feasible'] = np.isfinite(table['spines'])

    feasible = table['feasible']
    if feasible.sum() == 0:
        raise ParameterDomainError('no feasible system size in the study')
    table['fitness'] = 0.0
    product = np.ones(int(feasible.sum()))
    for metric in LOWER_IS_BETTER + HIGHER_IS_BETTER:
        scaled = normalize_metric(table.loc[feasible, metric], metric in HIGHER_IS_BETTER)
        table[f'{metric}_norm'] = np.nan
        table.loc[feasible, f'{metric}_norm'] = scaled
        product = product * scaled
    table.loc[feasible, 'fitness'] = product
    table.loc[~feasible, 'spines'] = np.nan

    best = table['fitness'].max()
    worst = table['fitness'].min()
    argmax = int(table.loc[table['fitness'] == best, 'size'].iloc[0])
    argmin = [int(s) for s in table.loc[table['fitness'] == worst, 'size']]
    logging.info(f'\tbest N: {argmax}, worst N: {argmin}')

    assumptions = {
        'instrument_range': {'value': config.instrument_range, 'source_derived': False},
        'robot_separation': {'value': config.robot_separation, 'source_derived': False},
        'overlap_count': {
            'value': 'pairs' if config.overlap_count is None else config.overlap_count,
            'source_derived': False,
        },
    }
    return FitnessReport(config.hop_batch, table, argmax, argmin, assumptions)
