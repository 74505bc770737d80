"""Throughput harness: pipeline decomposition, dataset diffs, sweeps.

Stages are cumulative pipelines over the same seeded sample order:

    full-decode chain:  read -> decode -> crop_resize -> simple_full
    crop-decode chain:  read -> crop_decode -> resize -> simple
    extra:              threeaug (crop chain with 3-aug augmentation)

``read`` fetches bytes and checks the CRC only.  Both chains see
identical (sample, crop-rect) sequences, so column-wise comparisons
measure exactly the decode strategy, nothing else.

Absolute images/s are hardware-bound; the properties this harness is
meant to demonstrate are ordinal (stage costs accumulate; the crop-decode
chain dominates the full-decode chain on random-resized-crop workloads).
"""

from __future__ import annotations

import json
import os
import platform
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imgops
from .container import (BuildSpec, build_container, open_container,
                        scan_source_tree, _load_source_image)
from .errors import ConfigError
from .jpeg import CropRect, decode_crop, decode_full
from .kernels import JIT_ENABLED
from .pipeline import RrcConfig, apply_aug, sample_rrc
from .rng import DOMAIN_PIPELINE, SampleRng, epoch_permutation
from .schedule import AugLevel

FULL_CHAIN = ("read", "decode", "crop_resize", "simple_full")
CROP_CHAIN = ("read", "crop_decode", "resize", "simple")
STAGES = ("read", "decode", "crop_decode", "crop_resize", "resize",
          "simple", "simple_full", "threeaug")


@dataclass(frozen=True)
class BenchConfig:
    data: str
    stage: str = "simple"
    batch_size: int = 256
    workers: int = 0               # 0 -> cpu count
    warmup_batches: int = 2
    images: int = 10_000
    res: int = 224
    seed: int = 0
    scale: tuple[float, float] = (0.08, 1.0)
    ratio: tuple[float, float] = (3.0 / 4.0, 4.0 / 3.0)

    def __post_init__(self):
        if self.stage not in STAGES and self.stage != "all":
            raise ConfigError(
                f"unknown stage {self.stage!r}; allowed: {', '.join(STAGES)} or all")
        if self.images < 10 * self.batch_size:
            raise ConfigError("images must be >= 10 * batch_size")
        if self.warmup_batches < 2:
            raise ConfigError("warmup_batches must be >= 2")


@dataclass
class BenchReport:
    throughput: dict = field(default_factory=dict)   # stage -> images/s
    decode_stats: dict = field(default_factory=dict)
    environment: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "throughput": self.throughput,
            "decode_stats": self.decode_stats,
            "environment": self.environment,
        }, indent=2, sort_keys=True)


def _environment(cfg: BenchConfig) -> dict:
    return {
        "data": str(cfg.data),
        "batch_size": cfg.batch_size,
        "workers": cfg.workers or (os.cpu_count() or 1),
        "images": cfg.images,
        "res": cfg.res,
        "seed": cfg.seed,
        "jit": JIT_ENABLED,
        "cpus": os.cpu_count(),
        "platform": platform.platform(),
    }


def _make_stage_fn(stage: str, res: int):
    """Cumulative pipeline for one stage; returns decode stats or None."""
    simple = AugLevel.SIMPLE
    threeaug = AugLevel.THREE_AUG

    def read(payload, rng, rect):
        return None

    def decode(payload, rng, rect):
        _, st = decode_full(payload)
        return st

    def crop_decode(payload, rng, rect):
        _, st = decode_crop(payload, rect)
        return st

    def crop_resize(payload, rng, rect):
        img, st = decode_full(payload)
        region = img[rect.y:rect.y + rect.h, rect.x:rect.x + rect.w]
        imgops.resize_bilinear(region, res)
        return st

    def resize(payload, rng, rect):
        region, st = decode_crop(payload, rect)
        imgops.resize_bilinear(region, res)
        return st

    def _aug_chain(level, crop):
        def fn(payload, rng, rect):
            if crop:
                region, st = decode_crop(payload, rect)
            else:
                img, st = decode_full(payload)
                region = img[rect.y:rect.y + rect.h, rect.x:rect.x + rect.w]
            out = imgops.resize_bilinear(region, res)
            out = apply_aug(rng, out, level)
            imgops.normalize(out)
            return st
        return fn

    return {
        "read": read,
        "decode": decode,
        "crop_decode": crop_decode,
        "crop_resize": crop_resize,
        "resize": resize,
        "simple": _aug_chain(simple, crop=True),
        "simple_full": _aug_chain(simple, crop=False),
        "threeaug": _aug_chain(threeaug, crop=True),
    }[stage]


def _workload(cfg: BenchConfig, handle):
    """The shared (sample index, crop rect) sequence for all stages."""
    n = len(handle)
    rrc = RrcConfig(cfg.scale, cfg.ratio, cfg.res)
    total = cfg.warmup_batches * cfg.batch_size + cfg.images
    perm = epoch_permutation(cfg.seed, 0, n)
    items = []
    recs = handle.records
    for pos in range(total):
        idx = int(perm[pos % n])
        rng = SampleRng(cfg.seed, 0, pos, DOMAIN_PIPELINE)
        rect = sample_rrc(rng, int(recs[idx]["width"]),
                          int(recs[idx]["height"]), rrc)
        items.append((pos, idx, rect))
    return items


def run_stage_bench(cfg: BenchConfig) -> BenchReport:
    """Time one cumulative stage; ``stage='all'`` runs both full chains."""
    stages = list(dict.fromkeys(FULL_CHAIN + CROP_CHAIN)) \
        if cfg.stage == "all" else [cfg.stage]
    report = BenchReport(environment=_environment(cfg))
    workers = cfg.workers or (os.cpu_count() or 1)
    with open_container(cfg.data) as handle:
        items = _workload(cfg, handle)
        pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        try:
            for stage in stages:
                fn = _make_stage_fn(stage, cfg.res)
                agg = {"mcus_entropy_decoded": 0, "mcus_reconstructed": 0,
                       "fallback_full": 0}

                def work(item):
                    pos, idx, rect = item
                    payload, w, h, label = handle.read_sample(idx)
                    rng = SampleRng(cfg.seed, 1, pos, DOMAIN_PIPELINE)
                    return fn(payload, rng, rect)

                warm = cfg.warmup_batches * cfg.batch_size
                t0 = None
                done = 0
                measured_stats = []
                for b0 in range(0, len(items), cfg.batch_size):
                    chunk = items[b0:b0 + cfg.batch_size]
                    if pool is None:
                        stats = [work(it) for it in chunk]
                    else:
                        stats = list(pool.map(work, chunk))
                    done += len(chunk)
                    if done == warm:
                        t0 = time.perf_counter()
                    elif done > warm and t0 is None:
                        # warmup boundary fell inside this batch
                        t0 = time.perf_counter()
                    if done > warm:
                        measured_stats.extend(s for s in stats if s is not None)
                elapsed = time.perf_counter() - t0
                for s in measured_stats:
                    agg["mcus_entropy_decoded"] += s.mcus_entropy_decoded
                    agg["mcus_reconstructed"] += s.mcus_reconstructed
                    agg["fallback_full"] += int(s.fallback_full)
                report.throughput[stage] = cfg.images / elapsed
                if measured_stats:
                    report.decode_stats[stage] = agg
        finally:
            if pool is not None:
                pool.shutdown(wait=False)
    return report


# ---------------------------------------------------------------------------
# Dataset pixel differences


class ContainerSource:
    """Decoded images of a container, in stored order."""

    def __init__(self, path):
        self.handle = open_container(path)

    def __len__(self):
        return len(self.handle)

    def get(self, i: int) -> np.ndarray:
        payload, _, _, _ = self.handle.read_sample(i)
        img, _ = decode_full(payload)
        return img

    def close(self):
        self.handle.close()


class FolderSource:
    """Images of a class-subfolder tree, in builder order."""

    def __init__(self, root):
        self.files = [f for f, _ in scan_source_tree(root)[0]]

    def __len__(self):
        return len(self.files)

    def get(self, i: int) -> np.ndarray:
        return np.asarray(_load_source_image(self.files[i]))

    def close(self):
        pass


def open_image_source(path: str | Path):
    p = Path(path)
    return FolderSource(p) if p.is_dir() else ContainerSource(p)


@dataclass
class DiffReport:
    per_sample: list[float]
    mean: float
    max: float

    def to_json(self, include_samples: bool = False) -> str:
        doc = {"samples": len(self.per_sample), "mean": self.mean,
               "max": self.max}
        if include_samples:
            doc["per_sample"] = self.per_sample
        return json.dumps(doc, indent=2, sort_keys=True)


def _center_crop(img: np.ndarray, size: int) -> np.ndarray:
    h, w = img.shape[:2]
    if h < size or w < size:
        raise ConfigError(f"image {w}x{h} smaller than crop size {size}")
    y = (h - size) // 2
    x = (w - size) // 2
    return img[y:y + size, x:x + size]


def diff_datasets(a, b, size: int, limit: int | None = None) -> DiffReport:
    """Mean absolute pixel error between two aligned image sources.

    Samples are paired by index (sources must have identical length and
    ordering).  Each pair is deterministically center-cropped to
    ``size`` x ``size``; if shapes differ, the larger-area image is first
    bilinear-resized to the smaller one's shape.  Error is on the [0, 1]
    pixel scale.  ``limit`` restricts the comparison to the first N pairs.
    """
    close_a = close_b = False
    if isinstance(a, (str, Path)):
        a = open_image_source(a)
        close_a = True
    if isinstance(b, (str, Path)):
        b = open_image_source(b)
        close_b = True
    try:
        if len(a) != len(b):
            raise ConfigError(
                f"sample count mismatch: {len(a)} vs {len(b)}")
        count = len(a) if limit is None else min(limit, len(a))
        per = []
        for i in range(count):
            ia = a.get(i)
            ib = b.get(i)
            if ia.shape != ib.shape:
                area_a = ia.shape[0] * ia.shape[1]
                area_b = ib.shape[0] * ib.shape[1]
                if area_a == area_b:
                    raise ConfigError(
                        f"sample {i}: ambiguous equal-area shapes "
                        f"{ia.shape} vs {ib.shape}")
                if area_a > area_b:
                    ia = imgops.resize_bilinear(ia, ib.shape[0], ib.shape[1])
                else:
                    ib = imgops.resize_bilinear(ib, ia.shape[0], ia.shape[1])
            ca = _center_crop(ia, size).astype(np.float64)
            cb = _center_crop(ib, size).astype(np.float64)
            per.append(float(np.abs(ca - cb).mean() / 255.0))
        return DiffReport(per, float(np.mean(per)), float(np.max(per)))
    finally:
        if close_a:
            a.close()
        if close_b:
            b.close()


# ---------------------------------------------------------------------------
# Compression parameter sweep


def compression_sweep(src_dir, res_list, quality_list, work_dir,
                      bench_images: int = 2000, bench_batch: int = 64,
                      seed: int = 0, keep_containers: bool = False,
                      diff_limit: int | None = 400) -> list[dict]:
    """Build a container per (res, quality) cell and measure it.

    Returns one row per cell: file size, build seconds, full-decode
    throughput, and mean absolute error against the source images.
    """
    work_dir = Path(work_dir)
    work_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for res in res_list:
        for quality in quality_list:
            out = work_dir / f"sweep_{res}_{quality}.bin"
            t0 = time.perf_counter()
            summary = build_container(BuildSpec(src_dir, res, quality, seed), out)
            build_s = time.perf_counter() - t0
            images = max(min(bench_images, summary.sample_count * 4),
                         10 * bench_batch)
            rep = run_stage_bench(BenchConfig(
                data=str(out), stage="decode", batch_size=bench_batch,
                images=images, res=224, seed=seed))
            with open_container(out) as handle:
                min_side = int(min(handle.records["width"].min(),
                                   handle.records["height"].min()))
            diff = diff_datasets(str(out), str(src_dir), min(224, min_side),
                                 limit=diff_limit)
            rows.append({
                "res": res,
                "quality": quality,
                "file_size_bytes": summary.total_bytes,
                "build_seconds": round(build_s, 3),
                "decode_images_per_sec": round(rep.throughput["decode"], 1),
                "mae": diff.mean,
            })
            if not keep_containers:
                out.unlink()
    return rows


def sweep_csv(rows: list[dict]) -> str:
    cols = ["res", "quality", "file_size_bytes", "build_seconds",
            "decode_images_per_sec", "mae"]
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(str(r[c]) for c in cols))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JIT vs pure-python kernel comparison (the two build modes)


def kernel_mode_bench(data: str, images: int = 64, batch: int = 4,
                      res: int = 224, seed: int = 0) -> dict:
    """Run the decode stage in both kernel modes via subprocesses."""
    src_root = Path(__file__).resolve().parent.parent
    out = {}
    for mode, flag in (("jit", "1"), ("numpy", "0")):
        env = dict(os.environ, CROPLOAD_JIT=flag)
        env["PYTHONPATH"] = os.pathsep.join(
            [str(src_root)] + ([env["PYTHONPATH"]] if "PYTHONPATH" in env else []))
        code = (
            "import json\n"
            "from cropload.bench import BenchConfig, run_stage_bench\n"
            f"rep = run_stage_bench(BenchConfig(data={data!r}, stage='decode',"
            f" batch_size={batch}, images={images}, res={res}, seed={seed}))\n"
            "print(json.dumps(rep.throughput))\n"
        )
        proc = subprocess.run([sys.executable, "-c", code], env=env,
                              capture_output=True, text=True, check=True)
        out[mode] = json.loads(proc.stdout.strip().splitlines()[-1])
    out["speedup"] = out["jit"]["decode"] / out["numpy"]["decode"]
    return out
