"""Seeded, counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, shard)`` so shards can be
drawn in any order, on any worker, and still reproduce bit for bit.
"""

import numpy as np

_MASK = (1 << 64) - 1


def shard_generator(seed: int, shard: int = 0) -> np.random.Generator:
    key = np.array([int(seed) & _MASK, int(shard) & _MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
