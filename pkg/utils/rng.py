"""Seeded uniform streams.

Every stream is a Philox (counter-based) generator keyed by a SeedSequence
built from the caller's seed plus an optional path of integers such as
(n, replication). A sub-stream therefore depends only on that key, never
on which thread drew it or in what order.
"""

import numpy as np

_MANTISSA = 2 ** 52


def stream(seed, *path):
    entropy = [int(seed), *(int(k) for k in path)]
    if any(k < 0 for k in entropy):
        raise ValueError(f"seed path must be non-negative, got {entropy}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def open_uniforms(rng, n):
    """n uniforms strictly inside (0,1): (k + 1/2) / 2**52, exact in float64."""
    k = rng.integers(0, _MANTISSA, size=n, dtype=np.int64)
    return (k.astype(np.float64) + 0.5) / _MANTISSA
