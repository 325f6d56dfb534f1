"""Counter-based reproducible random number streams.

Every random draw in the library is a pure function of a ``(seed, *path)``
tuple, where ``path`` is a sequence of small integers identifying the
consumer (stream id, node index, trial index, ...).  Streams built from
distinct paths are statistically independent, and the same tuple always
yields the same draws, on any platform, regardless of scheduling.
"""

from __future__ import annotations

import numpy as np

__all__ = ["generator"]


def generator(seed: int, *path: int) -> np.random.Generator:
    """Return a fresh Philox generator keyed by ``(seed, *path)``.

    Philox is counter based, so spawning a generator is O(1) and streams
    with different paths never overlap.
    """
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    seq = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(seq))
