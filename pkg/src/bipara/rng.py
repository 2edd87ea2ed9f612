"""Counter-based 64-bit sign generator.

Every random sign is a pure function of ``(seed, stream, index, trial)``:
the key words are folded through the SplitMix64 finalizer and the top bit of
the result picks the sign.  Draws therefore do not depend on evaluation
order or on how work is split across threads.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode():
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h


def splitmix64(x: int) -> int:
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix(*words: int) -> int:
    h = 0
    for w in words:
        h = splitmix64(h ^ (int(w) & MASK64))
    return h


def _splitmix64_vec(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x + np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def signs(seed: int, stream: str, indices, trial: int) -> np.ndarray:
    """+-1 signs for each index, keyed by (seed, stream, index, trial)."""
    idx = np.asarray(indices, dtype=np.uint64)
    h = np.full(idx.shape, mix(seed, fnv1a64(stream)), dtype=np.uint64)
    h = _splitmix64_vec(h ^ idx)
    h = _splitmix64_vec(h ^ np.uint64(int(trial) & MASK64))
    return np.where(h >> np.uint64(63), -1.0, 1.0)


def sign(seed: int, stream: str, index: int, trial: int) -> float:
    h = mix(seed, fnv1a64(stream), index, trial)
    return -1.0 if h >> 63 else 1.0


def substream_seed(seed: int, stream: str, *words: int) -> int:
    """Derived 64-bit seed, e.g. for seeding a numpy Generator per instance."""
    return mix(seed, fnv1a64(stream), *words)
