"""Deterministic random substreams.

Every randomized component derives its generator from a (seed, path)
key via :func:`substream`. Philox is counter-based, so replicate
streams are independent of scheduling and worker count: results are a
pure function of the key, never of execution order.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Stream namespace tags. Never reuse or renumber: frozen for reproducibility.
STREAM_BOOTSTRAP = 1
STREAM_SIMULATION = 2
STREAM_HOLDOUT = 3


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return an independent generator keyed by ``(seed, *path)``."""
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(ss))
