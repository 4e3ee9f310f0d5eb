"""Seeded PRNG helpers.

Everything random in this package flows through PCG64 generators built here,
so identical seeds give bit-identical results across runs and platforms.
"""

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    """Generator that is a pure function of (seed, epoch).

    Uses a spawn key so epoch streams are independent and reproducible
    without having to replay earlier epochs.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(epoch,))
    return np.random.Generator(np.random.PCG64(ss))
