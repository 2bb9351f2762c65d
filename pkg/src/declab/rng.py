"""Counter-based random streams.

Every random draw in the package comes from a generator addressed by a root
seed and a path of small integers, for example ``stream(seed, REGRET, epoch,
EXPLORE)``.  Streams with different paths are statistically independent and
do not depend on how many numbers other streams consumed, so changing one
phase of an experiment leaves the draws of every other phase untouched.
"""

from __future__ import annotations

import numpy as np

# Top-level path components.
PAC = 1
REGRET = 2
BASELINE = 3
ADVERSARY = 4
GENERATOR = 5
HARNESS = 6


def stream(root: int, *path: int) -> np.random.Generator:
    """Philox generator addressed by ``(root, *path)``."""
    if root < 0 or any(int(k) < 0 for k in path):
        raise ValueError("seeds and path components must be nonnegative")
    seq = np.random.SeedSequence(entropy=int(root), spawn_key=tuple(int(k) for k in path))
    return np.random.Generator(np.random.Philox(seq))


def draw_index(rng: np.random.Generator, probs: np.ndarray) -> int:
    """Inverse-CDF draw from a pmf using one uniform variate.

    Zero-probability entries are never returned, even under roundoff in the
    cumulative sums.
    """
    cdf = np.cumsum(probs)
    u = rng.random() * cdf[-1]
    idx = int(np.searchsorted(cdf, u, side="right"))
    idx = min(idx, probs.size - 1)
    while probs[idx] <= 0.0:
        idx -= 1
    return idx
