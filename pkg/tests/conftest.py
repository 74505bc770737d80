"""Shared fixtures: synthetic corpora and containers built once per session."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from cropload.container import BuildSpec, build_container
from cropload.synth import synth_image, write_corpus

# Desk-scale knobs, shared by the regular suite and the acceptance suite.
MAIN_CORPUS_IMAGES = 1600
MAIN_CORPUS_CLASSES = 6
MAIN_MIN_SIDE = 220
MAIN_MAX_SIDE = 420


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory) -> Path:
    """1,600 synthetic natural-style images in class subfolders."""
    root = tmp_path_factory.mktemp("corpus") / "imgs"
    write_corpus(root, MAIN_CORPUS_IMAGES, classes=MAIN_CORPUS_CLASSES,
                 min_side=MAIN_MIN_SIDE, max_side=MAIN_MAX_SIDE, seed=11)
    return root


def _subset_tree(src: Path, dst: Path, count: int) -> Path:
    """Symlink the first `count` images (builder order) into a new tree."""
    from cropload.container import scan_source_tree

    files, _ = scan_source_tree(src)
    for f, _label in files[:count]:
        rel = f.relative_to(src)
        target = dst / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.symlink_to(f)
    return dst


@pytest.fixture(scope="session")
def corpus_200_dir(corpus_dir, tmp_path_factory) -> Path:
    return _subset_tree(corpus_dir, tmp_path_factory.mktemp("c200") / "imgs", 200)


@pytest.fixture(scope="session")
def corpus_400_dir(corpus_dir, tmp_path_factory) -> Path:
    return _subset_tree(corpus_dir, tmp_path_factory.mktemp("c400") / "imgs", 400)


@pytest.fixture(scope="session")
def bench_container(corpus_dir, tmp_path_factory) -> Path:
    """The main benchmark dataset: full corpus at max-res 384, quality 90."""
    out = tmp_path_factory.mktemp("bench") / "bench_384_90.bin"
    build_container(BuildSpec(corpus_dir, 384, 90, seed=1), out)
    return out


@pytest.fixture(scope="session")
def small_container(corpus_200_dir, tmp_path_factory) -> Path:
    """200-sample container for loader/CLI/bindings tests."""
    out = tmp_path_factory.mktemp("small") / "small_320_90.bin"
    build_container(BuildSpec(corpus_200_dir, 320, 90, seed=2), out)
    return out


@pytest.fixture(scope="session")
def native_container(corpus_400_dir, tmp_path_factory) -> Path:
    """Resolution-native (no resize) q=90 container of 400 images."""
    out = tmp_path_factory.mktemp("native") / "native_512_90.bin"
    build_container(BuildSpec(corpus_400_dir, 512, 90, seed=3), out)
    return out


@pytest.fixture(scope="session")
def jpeg_corpus() -> list[np.ndarray]:
    """24 in-memory natural-style images for codec-level tests."""
    rng = np.random.default_rng(5)
    out = []
    for i in range(24):
        h = int(rng.integers(120, 420))
        w = int(rng.integers(120, 420))
        out.append(synth_image(7000 + i, h, w))
    return out
