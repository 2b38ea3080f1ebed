"""Seeded random streams.

Every stream is a numpy ``PCG64`` generator seeded from
``SeedSequence(entropy=master_seed, spawn_key=key)``.  ``SeedSequence`` hashes
the master seed together with the key tuple, so streams for distinct keys
(grid index, trial index, purpose tag) are statistically independent and
can be regenerated in any order.  Bit-exact output is only promised for a
fixed numpy version.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

# purpose tags appended to a trial key
CLOUD = 0
EMBEDDING = 1
AUX = 2

SeedLike = int | Sequence[int] | np.random.SeedSequence


def seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    """``int`` -> master seed; ``(master, k1, k2, ...)`` -> keyed child."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (int, np.integer)):
        return np.random.SeedSequence(int(seed))
    key = [int(v) for v in seed]
    if not key:
        raise ValueError("empty seed key")
    return np.random.SeedSequence(entropy=key[0], spawn_key=tuple(key[1:]))


def make_rng(seed: SeedLike) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed)))


def as_key(seed: SeedLike) -> tuple[int, ...]:
    if isinstance(seed, np.random.SeedSequence):
        return (int(seed.entropy), *seed.spawn_key)
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(v) for v in seed)
