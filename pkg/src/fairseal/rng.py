"""Deterministic random-stream construction.

All randomness in the package flows through counter-based Philox generators
keyed by an integer seed plus a structural path (replicate index, classifier
index, ...).  Substreams are independent of iteration order, so sharded or
parallel execution reproduces the sequential results bit for bit.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for `(seed, *path)`.

    The same key always yields the same stream, and distinct keys yield
    statistically independent streams.
    """
    return np.random.Generator(np.random.Philox(seed=np.random.SeedSequence((int(seed), *map(int, path)))))
