"""Seed derivation helpers.

Every stochastic stage draws from a generator seeded by the run seed plus a
tuple of integer keys, so serial, parallel and permuted executions consume the
same streams.
"""
from typing import Iterable

import numpy as np

_UINT32 = 0xFFFFFFFF


def _as_entropy(seed: int, keys: Iterable[int]) -> list:
    # SeedSequence only takes non-negative words; voxel indices can be negative.
    # The key count leads so (s,) and (s, 0) differ; SeedSequence pads with zeros.
    keys = [int(k) & _UINT32 for k in keys]
    seed = int(seed)
    return [len(keys), seed & _UINT32, (seed >> 32) & _UINT32] + keys


def derive_seed(seed: int, *keys: int) -> np.random.SeedSequence:
    """Return a SeedSequence unique to `(seed, *keys)`."""
    return np.random.SeedSequence(_as_entropy(seed, keys))


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Return a Generator unique to `(seed, *keys)`."""
    return np.random.default_rng(derive_seed(seed, *keys))
