"""Seeded random streams with a repo-fixed bit algorithm.

Every uniform variate is built from the raw 64-bit output of PCG64
(``numpy.random.PCG64``, whose raw stream is version-stable) as
``(x >> 11) * 2**-53``.  numpy's distribution methods are not used, so
traces do not depend on numpy's sampling code.

Replication seeds are derived from the master seed with the SplitMix64
finalizer::

    z = (master + (r + 1) * 0x9E3779B97F4A7C15) mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    seed_r = z ^ (z >> 31)
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_INV_2_53 = 1.0 / 9007199254740992.0


def splitmix64(x):
    z = x & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def replication_seed(master_seed, index):
    """Seed for replication ``index`` (0-based) of a run seeded by ``master_seed``."""
    return splitmix64((master_seed + (index + 1) * GOLDEN) & MASK64)


class RandomStream:
    """A single-owner stream of uniforms on [0, 1).

    ``stream`` selects an independent substream for the same seed (the
    environment uses 0, policies with internal randomness use 1).
    """

    def __init__(self, seed, stream=0):
        if seed < 0 or seed > MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self.stream = stream
        ss = np.random.SeedSequence(seed, spawn_key=(stream,))
        self._bitgen = np.random.PCG64(ss)

    def uniform(self):
        x = int(self._bitgen.random_raw())
        return (x >> 11) * _INV_2_53

    def uniforms(self, n):
        raw = self._bitgen.random_raw(n)
        return (raw >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def integer(self, upper):
        """Uniform integer in [0, upper)."""
        k = int(self.uniform() * upper)
        return min(k, upper - 1)
