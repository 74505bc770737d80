"""Synthetic natural-looking test images.

Deterministic per (seed, index): smooth multi-scale color fields plus a
few hard-edged shapes and mild sensor-style noise, which gives JPEG
encoders realistic work (smooth regions, edges, texture) without any
external data.  Used by the test corpus fixtures and handy for trying the
CLI without a dataset.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def synth_image(seed: int, height: int, width: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    img = np.zeros((height, width, 3), np.float64)
    # low-frequency color fields at three scales
    for cells in (3, 7, 17):
        field = rng.uniform(0, 255, (cells, cells, 3))
        ys = np.linspace(0, cells - 1, height)
        xs = np.linspace(0, cells - 1, width)
        y0 = np.clip(ys.astype(int), 0, cells - 2)
        x0 = np.clip(xs.astype(int), 0, cells - 2)
        wy = (ys - y0)[:, None, None]
        wx = (xs - x0)[None, :, None]
        top = field[y0][:, x0] * (1 - wx) + field[y0][:, x0 + 1] * wx
        bot = field[y0 + 1][:, x0] * (1 - wx) + field[y0 + 1][:, x0 + 1] * wx
        img += (top * (1 - wy) + bot * wy) / 3.0
    # hard-edged shapes: rectangles and ellipses
    yy, xx = np.mgrid[0:height, 0:width]
    for _ in range(6):
        color = rng.uniform(0, 255, 3)
        if rng.random() < 0.5:
            y0, x0 = rng.integers(0, height), rng.integers(0, width)
            h = int(rng.integers(height // 8 + 1, height // 2 + 2))
            w = int(rng.integers(width // 8 + 1, width // 2 + 2))
            sel = (yy >= y0) & (yy < y0 + h) & (xx >= x0) & (xx < x0 + w)
        else:
            cy, cx = rng.integers(0, height), rng.integers(0, width)
            ry = max(2, int(rng.integers(height // 10 + 1, height // 3 + 2)))
            rx = max(2, int(rng.integers(width // 10 + 1, width // 3 + 2)))
            sel = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
        alpha = rng.uniform(0.5, 0.95)
        img[sel] = img[sel] * (1 - alpha) + color * alpha
    img += rng.normal(0.0, 6.0, img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


def write_corpus(root: str | Path, n_images: int, classes: int = 4,
                 min_side: int = 256, max_side: int = 512,
                 seed: int = 0, fmt: str = "png") -> list[Path]:
    """Write a class-subfolder tree of synthetic images; returns paths."""
    from PIL import Image

    root = Path(root)
    rng = np.random.default_rng(seed)
    paths = []
    for i in range(n_images):
        label = i % classes
        sub = root / f"class_{label:03d}"
        sub.mkdir(parents=True, exist_ok=True)
        h = int(rng.integers(min_side, max_side + 1))
        w = int(rng.integers(min_side, max_side + 1))
        img = synth_image(seed * 1_000_003 + i, h, w)
        p = sub / f"img_{i:06d}.{fmt}"
        if fmt == "png":
            Image.fromarray(img).save(p, compress_level=1)
        else:
            Image.fromarray(img).save(p)
        paths.append(p)
    return paths
