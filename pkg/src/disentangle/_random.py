from __future__ import annotations

import numpy as np


def make_rng(seed=None) -> np.random.Generator:
    """Counter-based (Philox) generator; passes existing generators through.

    ``seed`` may be an int, a sequence of ints, a ``SeedSequence`` or a
    ``Generator``.  ``None`` is rejected on purpose: every random draw in
    this package must be reproducible.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("an explicit seed is required")
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def spawn_seeds(seed, n: int) -> list[np.random.SeedSequence]:
    """Independent child seed sequences, stable under reordering of consumers."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return seed.spawn(n)
