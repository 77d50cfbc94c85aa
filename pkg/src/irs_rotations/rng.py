"""Named, reproducible random streams.

Every draw in a Monte Carlo campaign comes from its own stream keyed by
``(seed, *keys)``, e.g. ``(seed, k_index, trial, PHASES)``.  Streams are
independent of the order in which trials run, so workers can process
disjoint trial ranges and still reproduce the serial result.
"""

from __future__ import annotations

import numpy as np

__all__ = ["make_rng", "stream", "PHASES", "IRS_USER", "DIRECT", "BEAMS", "USERS"]

# purpose tags
PHASES = 0
IRS_USER = 1
DIRECT = 2
BEAMS = 3
USERS = 4


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the stream named by ``keys`` under root ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def make_rng(seed=None) -> np.random.Generator:
    """Coerce ``None``, an int, a SeedSequence or a Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
