"""Named, counter-based random streams.

Every consumer of randomness asks for a stream by name so that adding a new
consumer never shifts the numbers another one sees.
"""
import zlib

import numpy as np

TERRAIN_PHASES = 'terrain.phases'
CLIMB_GRIP = 'climb.grip'
STUDY_FAILURE = 'study.failure'
PERCEPTION_NOISE = 'perception.noise'


def seed_sequence(seed, name):
    """Seed sequence for the stream `name` under the global `seed`."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(name.encode()),))


def stream(seed, name):
    """Philox generator for the stream `name` under the global `seed`."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, name)))


def as_generator(rng):
    """Accepts an integer seed or an existing Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
