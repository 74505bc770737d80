"""Deterministic parallel sample pipeline.

Per sample: draw a random-resized-crop window, crop-decode it straight
from the stored JPEG, bilinear-resize to the output size, augment,
normalize into the batch tensor.  Every random choice comes from a
counter-based stream keyed by (seed, epoch, index), so batch content is a
pure function of (dataset bytes, config, seed, epoch) and worker count
only changes wall time, never pixels.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imgops
from .container import ContainerHandle, open_container
from .errors import ConfigError
from .jpeg import CropRect, decode_crop
from .masking import MaskSpec, sample_mask
from .rng import DOMAIN_MASK, DOMAIN_PIPELINE, SampleRng, epoch_permutation
from .schedule import AugLevel


@dataclass(frozen=True)
class RrcConfig:
    """Random-resized-crop distribution: area fractions and aspect ratios."""

    scale: tuple[float, float] = (0.08, 1.0)
    ratio: tuple[float, float] = (3.0 / 4.0, 4.0 / 3.0)
    out_size: int = 224
    max_attempts: int = 10

    def __post_init__(self):
        if not 0.0 < self.scale[0] <= self.scale[1] <= 1.0:
            raise ConfigError(f"scale bounds must satisfy 0 < lo <= hi <= 1: {self.scale}")
        if not 0.0 < self.ratio[0] <= self.ratio[1]:
            raise ConfigError(f"ratio bounds must be positive and ordered: {self.ratio}")
        if self.out_size < 16:
            raise ConfigError(f"output size must be >= 16: {self.out_size}")
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")


def sample_rrc(rng: SampleRng, src_w: int, src_h: int, cfg: RrcConfig) -> CropRect:
    """Draw a crop window; falls back to the largest centered crop with the
    aspect clamped into range when max_attempts draws do not fit."""
    area = src_w * src_h
    log_lo = math.log(cfg.ratio[0])
    log_hi = math.log(cfg.ratio[1])
    for _ in range(cfg.max_attempts):
        target = area * rng.uniform(cfg.scale[0], cfg.scale[1])
        aspect = math.exp(rng.uniform(log_lo, log_hi))
        w = int(math.sqrt(target * aspect) + 0.5)
        h = int(math.sqrt(target / aspect) + 0.5)
        if 0 < w <= src_w and 0 < h <= src_h:
            x = rng.randint(src_w - w + 1)
            y = rng.randint(src_h - h + 1)
            return CropRect(x, y, w, h)
    in_ratio = src_w / src_h
    if in_ratio < cfg.ratio[0]:
        w = src_w
        h = min(src_h, max(1, int(w / cfg.ratio[0] + 0.5)))
    elif in_ratio > cfg.ratio[1]:
        h = src_h
        w = min(src_w, max(1, int(h * cfg.ratio[1] + 0.5)))
    else:
        w, h = src_w, src_h
    return CropRect((src_w - w) // 2, (src_h - h) // 2, w, h)


def apply_aug(rng: SampleRng, img: np.ndarray, level: AugLevel) -> np.ndarray:
    """Simple / 3-aug / 3-aug+ augmentation, all draws from ``rng``.

    Simple: horizontal flip at p=0.5.  3-aug adds exactly one of
    grayscale, solarize, gaussian blur, chosen uniformly.  3-aug+ then
    applies brightness/contrast/saturation jitter with factors from
    U[0.7, 1.3].
    """
    if rng.random() < 0.5:
        img = imgops.hflip(img)
    if level is not AugLevel.SIMPLE:
        op = rng.randint(3)
        if op == 0:
            img = imgops.grayscale(img)
        elif op == 1:
            img = imgops.solarize(img)
        else:
            sigma = rng.uniform(*imgops.BLUR_SIGMA_RANGE)
            img = imgops.gaussian_blur(img, sigma)
    if level is AugLevel.THREE_AUG_PLUS:
        s = imgops.JITTER_STRENGTH
        img = imgops.adjust_brightness(img, rng.uniform(1.0 - s, 1.0 + s))
        img = imgops.adjust_contrast(img, rng.uniform(1.0 - s, 1.0 + s))
        img = imgops.adjust_saturation(img, rng.uniform(1.0 - s, 1.0 + s))
    return img


@dataclass
class ImageBatch:
    """One assembled batch: planar normalized pixels plus provenance."""

    pixels: np.ndarray            # float32 [b, 3, h, h]
    labels: np.ndarray            # int64 [b]
    indices: np.ndarray           # int64 [b], dataset sample ids
    epoch: int
    mask: np.ndarray | None = None    # int32 [b, k] masked token ids
    uint8: np.ndarray | None = None   # uint8 [b, h, h, 3] pre-normalize view

    def __len__(self) -> int:
        return self.pixels.shape[0]


@dataclass
class LoaderConfig:
    data: str
    batch_size: int = 256
    workers: int = 0              # 0 -> cpu count
    seed: int = 0
    res: int = 224
    scale: tuple[float, float] = (0.08, 1.0)
    ratio: tuple[float, float] = (3.0 / 4.0, 4.0 / 3.0)
    aug: str = "simple"
    mask_ratio: float = 0.0
    patch: int = 16
    keep_uint8: bool = False

    _KEYS = ("data", "batch_size", "workers", "seed", "res", "scale",
             "ratio", "aug", "mask_ratio", "patch", "keep_uint8")

    @classmethod
    def from_document(cls, doc: dict | str | Path) -> "LoaderConfig":
        if isinstance(doc, Path) or (isinstance(doc, str)
                                     and not doc.lstrip().startswith("{")):
            doc = Path(doc).read_text()
        if isinstance(doc, str):
            doc = json.loads(doc)
        if not isinstance(doc, dict):
            raise ConfigError("loader config must be a JSON object")
        unknown = set(doc) - set(cls._KEYS)
        if unknown:
            raise ConfigError(f"unknown loader config keys: {sorted(unknown)}")
        if "data" not in doc:
            raise ConfigError("loader config missing required key: data")
        kw = dict(doc)
        for tup_key in ("scale", "ratio"):
            if tup_key in kw:
                v = kw[tup_key]
                if not (isinstance(v, (list, tuple)) and len(v) == 2):
                    raise ConfigError(f"{tup_key} must be a [lo, hi] pair")
                kw[tup_key] = (float(v[0]), float(v[1]))
        return cls(**kw)

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.aug not in tuple(a.value for a in AugLevel):
            raise ConfigError(
                f"aug must be one of {[a.value for a in AugLevel]}, got {self.aug!r}")
        if not 0.0 <= self.mask_ratio <= 1.0:
            raise ConfigError(f"mask_ratio out of [0, 1]: {self.mask_ratio}")
        if self.mask_ratio > 0.0 and self.res % self.patch != 0:
            raise ConfigError(
                f"mask_ratio set but patch {self.patch} does not divide res {self.res}")


class Loader:
    """Epoch iterator over a container with the full sample pipeline.

    Samples are visited in a seeded per-epoch permutation; the last batch
    of an epoch may be short.  Worker threads fill disjoint batch slots,
    so any worker count yields identical batches.
    """

    def __init__(self, config: LoaderConfig,
                 container: ContainerHandle | None = None):
        config.validate()
        self.config = config
        self.handle = container if container is not None \
            else open_container(config.data)
        self.rrc = RrcConfig(config.scale, config.ratio, config.res)
        self.aug_level = AugLevel(config.aug)
        self.workers = config.workers if config.workers > 0 \
            else (os.cpu_count() or 1)
        self.mask_spec = (
            MaskSpec.from_resolution(config.res, config.patch, config.mask_ratio)
            if config.mask_ratio > 0.0 else None)
        self._pool = (ThreadPoolExecutor(max_workers=self.workers)
                      if self.workers > 1 else None)

    @classmethod
    def from_document(cls, doc) -> "Loader":
        return cls(LoaderConfig.from_document(doc))

    def __len__(self) -> int:
        return len(self.handle)

    @property
    def batches_per_epoch(self) -> int:
        return -(-len(self.handle) // self.config.batch_size)

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=False)
        self.handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _fill_sample(self, epoch: int, index: int, batch: ImageBatch,
                     slot: int) -> None:
        cfg = self.config
        rng = SampleRng(cfg.seed, epoch, index, DOMAIN_PIPELINE)
        payload, w, h, label = self.handle.read_sample(index)
        rect = sample_rrc(rng, w, h, self.rrc)
        region, _ = decode_crop(payload, rect)
        img = imgops.resize_bilinear(region, cfg.res)
        img = apply_aug(rng, img, self.aug_level)
        imgops.normalize(img, batch.pixels[slot])
        batch.labels[slot] = label
        batch.indices[slot] = index
        if batch.uint8 is not None:
            batch.uint8[slot] = img
        if self.mask_spec is not None:
            mask_rng = SampleRng(cfg.seed, epoch, index, DOMAIN_MASK)
            batch.mask[slot] = sample_mask(mask_rng, self.mask_spec)

    def epoch(self, epoch: int):
        """Yield the batches of one epoch in permutation order."""
        cfg = self.config
        perm = epoch_permutation(cfg.seed, epoch, len(self.handle))
        res = cfg.res
        k = self.mask_spec.masked_count if self.mask_spec is not None else 0
        for start in range(0, len(perm), cfg.batch_size):
            idxs = perm[start:start + cfg.batch_size]
            b = len(idxs)
            batch = ImageBatch(
                pixels=np.empty((b, 3, res, res), np.float32),
                labels=np.empty(b, np.int64),
                indices=np.empty(b, np.int64),
                epoch=epoch,
                mask=(np.empty((b, k), np.int32)
                      if self.mask_spec is not None else None),
                uint8=(np.empty((b, res, res, 3), np.uint8)
                       if cfg.keep_uint8 else None),
            )
            if self._pool is None:
                for slot, index in enumerate(idxs):
                    self._fill_sample(epoch, int(index), batch, slot)
            else:
                futures = [
                    self._pool.submit(self._fill_sample, epoch, int(index),
                                      batch, slot)
                    for slot, index in enumerate(idxs)
                ]
                for f in futures:
                    f.result()
            yield batch
