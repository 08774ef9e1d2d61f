"""Splittable RNG streams.

Every Monte Carlo trial draws from a stream derived from (master seed,
path of integer indices).  Streams are independent of worker count and
scheduling, so aggregated results are reproducible bit-for-bit.
"""

from __future__ import annotations

import numpy as np

_U64 = (1 << 64) - 1


def substream(*path: int) -> np.random.Generator:
    """Generator keyed by an integer path, e.g. substream(seed, p_index, trial)."""
    return np.random.default_rng(np.random.SeedSequence([int(k) & _U64 for k in path]))
