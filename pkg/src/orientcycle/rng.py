"""Deterministic, splittable random streams.

Every (seed, trial) pair maps to an independent Philox stream, so results do
not depend on how trials are scheduled across workers.
"""
import os

import numpy as np

SEED_ENV = "ORIENTCYCLE_SEED"


def default_seed():
    return int(os.environ.get(SEED_ENV, "0"))


def stream(seed, *keys):
    """Return a Generator keyed by ``seed`` and any number of integer keys."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def child(rng, *keys):
    """Derive a sub-stream from an existing generator without disturbing it much.

    Draws one 64-bit word from ``rng`` and uses it as entropy for a new stream.
    """
    word = int(rng.integers(0, 2**63 - 1))
    return stream(word, *keys)
