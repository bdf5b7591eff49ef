"""Seeded bootstrap resampling."""

import numpy as np


def bootstrap_sample(n: int, seed: int) -> np.ndarray:
    """n row indices drawn uniformly with replacement; fixed by the seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.random.default_rng(seed).integers(0, n, size=n)
