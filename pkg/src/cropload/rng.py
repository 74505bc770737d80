"""Counter-based per-sample random streams.

Every random decision in the pipeline comes from a SampleRng keyed by
(seed, epoch, sample_index, domain).  The generator is splitmix64: the
k-th output is a pure function of the key and k, so identical keys give
identical streams no matter how work is scheduled across workers.  That
is the whole determinism contract of the loader.

Domains keep independent decision streams from colliding (e.g. masking
draws must not shift augmentation draws).
"""

from __future__ import annotations

import numpy as np

_M64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

DOMAIN_PIPELINE = 0
DOMAIN_MASK = 1
DOMAIN_PERMUTATION = 3


def _mix(z: int) -> int:
    z &= _M64
    z = ((z ^ (z >> 30)) * _MIX1) & _M64
    z = ((z ^ (z >> 27)) * _MIX2) & _M64
    return z ^ (z >> 31)


class SampleRng:
    """Deterministic stream for one (seed, epoch, index, domain) key."""

    __slots__ = ("_state",)

    def __init__(self, seed: int, epoch: int, index: int, domain: int = DOMAIN_PIPELINE):
        h = _mix(seed & _M64)
        h = _mix(h ^ ((epoch * _GAMMA) & _M64))
        h = _mix(h ^ ((index * _GAMMA) & _M64))
        h = _mix(h ^ ((domain * _GAMMA) & _M64))
        self._state = h

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _M64
        return _mix(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        v = int(self.random() * n)
        return n - 1 if v >= n else v

    def random_array(self, n: int) -> np.ndarray:
        """Vectorized equivalent of n consecutive random() calls."""
        ctr = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GAMMA) \
            + np.uint64(self._state)
        self._state = (self._state + n * _GAMMA) & _M64
        z = ctr
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def shuffle(self, items) -> None:
        """In-place Fisher-Yates, driven by this stream."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]


def epoch_permutation(seed: int, epoch: int, n: int) -> np.ndarray:
    """The visiting order of sample indices for one epoch."""
    rng = SampleRng(seed, epoch, 0, DOMAIN_PERMUTATION)
    perm = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = rng.randint(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm
