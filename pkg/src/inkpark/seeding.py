"""Deterministic seed derivation.

Every random decision in the pipeline draws from a NumPy generator whose
seed is derived from the run's master seed plus a path of string/int keys
(e.g. ``derive_seed(seed, "subject", 12, "task", 3)``). The derivation is
a splitmix64 chain over the mixed-in keys, so sub-streams are independent
of each other and of the order in which unrelated streams are consumed.
"""

import numpy as np

MASK64 = (1 << 64) - 1

_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(state: int) -> int:
    z = (state + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def _fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h


def derive_seed(seed: int, *keys) -> int:
    """Mix ``keys`` (ints or strings) into ``seed``; returns a 64-bit seed."""
    state = _splitmix64(seed & MASK64)
    for key in keys:
        if isinstance(key, str):
            key = _fnv1a64(key.encode("utf-8"))
        elif not isinstance(key, (int, np.integer)):
            raise TypeError(f"seed keys must be int or str, got {type(key)!r}")
        state = _splitmix64((state ^ (int(key) & MASK64)) & MASK64)
    return state


def rng_for(seed: int, *keys) -> np.random.Generator:
    """A PCG64 generator on the sub-stream named by ``keys``."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *keys)))
