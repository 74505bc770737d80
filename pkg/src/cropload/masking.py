"""Random patch masking for masked-image-modeling batches.

A mask selects exactly round-half-up(m * N) of the N = (h/p)^2 patch
tokens, as the first k entries of a uniform random permutation.  Rounding
half up is pinned because the published ratio/resolution pairs are
integral except 0.80 and 0.85 on the 192/224 grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .rng import SampleRng
from .schedule import ScheduleScheme, params_for_epoch


@dataclass(frozen=True)
class MaskSpec:
    grid: int          # tokens per side, h / p
    ratio: float

    def __post_init__(self):
        if self.grid < 1:
            raise ConfigError(f"grid must be >= 1, got {self.grid}")
        if not 0.0 <= self.ratio <= 1.0:
            raise ConfigError(f"mask ratio out of [0, 1]: {self.ratio}")

    @classmethod
    def from_resolution(cls, resolution: int, patch: int, ratio: float) -> "MaskSpec":
        if patch < 1 or resolution % patch != 0:
            raise ConfigError(
                f"patch size {patch} does not divide resolution {resolution}")
        return cls(resolution // patch, ratio)

    @property
    def tokens(self) -> int:
        return self.grid * self.grid

    @property
    def masked_count(self) -> int:
        return int(math.floor(self.ratio * self.tokens + 0.5))


def sample_mask(rng: SampleRng, spec: MaskSpec) -> np.ndarray:
    """Masked token indices, sorted ascending; exactly spec.masked_count."""
    n = spec.tokens
    k = spec.masked_count
    perm = np.arange(n, dtype=np.int32)
    rng.shuffle(perm)
    mask = perm[:k]
    mask.sort()
    return mask


def mask_for_epoch(rng: SampleRng, scheme: ScheduleScheme, epoch: int,
                   total_epochs: int, patch: int) -> np.ndarray:
    """Mask for the stage active at ``epoch``; k changes at stage bounds."""
    params = params_for_epoch(scheme, epoch, total_epochs)
    spec = MaskSpec.from_resolution(params.resolution, patch,
                                    params.masking_ratio)
    return sample_mask(rng, spec)
