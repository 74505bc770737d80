"""Pixel operations for the sample pipeline: resize, augment, normalize.

All kernels follow the dual-mode convention from ``cropload.kernels`` and
use pinned arithmetic (float64 weights, round-half-up to uint8) so results
are reproducible bit for bit everywhere.
"""

from __future__ import annotations

import math

import numpy as np

from .kernels import kernel

IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], np.float32)
IMAGENET_STD = np.array([0.229, 0.224, 0.225], np.float32)

SOLARIZE_THRESHOLD = 128
BLUR_SIGMA_RANGE = (0.1, 2.0)
JITTER_STRENGTH = 0.3


@kernel
def _resize_bilinear_kernel(src, out):
    ih = src.shape[0]
    iw = src.shape[1]
    oh = out.shape[0]
    ow = out.shape[1]
    sy = ih / oh
    sx = iw / ow
    for oy in range(oh):
        fy = (oy + 0.5) * sy - 0.5
        if fy < 0.0:
            fy = 0.0
        y0 = int(fy)
        if y0 > ih - 1:
            y0 = ih - 1
        y1 = y0 + 1
        if y1 > ih - 1:
            y1 = ih - 1
        wy = fy - y0
        for ox in range(ow):
            fx = (ox + 0.5) * sx - 0.5
            if fx < 0.0:
                fx = 0.0
            x0 = int(fx)
            if x0 > iw - 1:
                x0 = iw - 1
            x1 = x0 + 1
            if x1 > iw - 1:
                x1 = iw - 1
            wx = fx - x0
            for c in range(3):
                top = (1.0 - wx) * src[y0, x0, c] + wx * src[y0, x1, c]
                bot = (1.0 - wx) * src[y1, x0, c] + wx * src[y1, x1, c]
                v = int((1.0 - wy) * top + wy * bot + 0.5)
                if v > 255:
                    v = 255
                out[oy, ox, c] = v


def resize_bilinear(region: np.ndarray, out_h: int, out_w: int | None = None) -> np.ndarray:
    """Half-pixel-aligned bilinear resize to (out_h, out_w)."""
    if out_w is None:
        out_w = out_h
    if region.ndim != 3 or region.shape[2] != 3 or region.shape[0] < 1 \
            or region.shape[1] < 1:
        raise ValueError(f"expected nonempty (h, w, 3) region, got {region.shape}")
    out = np.empty((out_h, out_w, 3), np.uint8)
    _resize_bilinear_kernel(region, out)
    return out


@kernel
def _grayscale_kernel(img, out):
    # BT.601 luma, fixed point; the weights sum to exactly 2^16.
    h = img.shape[0]
    w = img.shape[1]
    for y in range(h):
        for x in range(w):
            v = (19595 * int(img[y, x, 0]) + 38470 * int(img[y, x, 1])
                 + 7471 * int(img[y, x, 2]) + 32768) >> 16
            out[y, x, 0] = v
            out[y, x, 1] = v
            out[y, x, 2] = v


def grayscale(img: np.ndarray) -> np.ndarray:
    out = np.empty_like(img)
    _grayscale_kernel(img, out)
    return out


@kernel
def _solarize_kernel(img, threshold, out):
    h = img.shape[0]
    w = img.shape[1]
    for y in range(h):
        for x in range(w):
            for c in range(3):
                v = img[y, x, c]
                out[y, x, c] = 255 - v if v >= threshold else v


def solarize(img: np.ndarray, threshold: int = SOLARIZE_THRESHOLD) -> np.ndarray:
    out = np.empty_like(img)
    _solarize_kernel(img, threshold, out)
    return out


@kernel
def _reflect(i, n):
    if n == 1:
        return 0
    period = 2 * n - 2
    i = i % period
    if i >= n:
        i = period - i
    return i


@kernel
def _blur_h_kernel(src, wts, tmp):
    h = src.shape[0]
    w = src.shape[1]
    r = (wts.shape[0] - 1) // 2
    for y in range(h):
        for x in range(w):
            for c in range(3):
                acc = 0.0
                for k in range(wts.shape[0]):
                    acc += wts[k] * src[y, _reflect(x + k - r, w), c]
                tmp[y, x, c] = acc


@kernel
def _blur_v_kernel(tmp, wts, out):
    h = tmp.shape[0]
    w = tmp.shape[1]
    r = (wts.shape[0] - 1) // 2
    for y in range(h):
        for x in range(w):
            for c in range(3):
                acc = 0.0
                for k in range(wts.shape[0]):
                    acc += wts[k] * tmp[_reflect(y + k - r, h), x, c]
                v = int(acc + 0.5)
                if v > 255:
                    v = 255
                out[y, x, c] = v


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur, radius ceil(3*sigma), reflect padding."""
    radius = max(1, math.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    wts = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    wts /= wts.sum()
    tmp = np.empty(img.shape, np.float64)
    out = np.empty_like(img)
    _blur_h_kernel(img, wts, tmp)
    _blur_v_kernel(tmp, wts, out)
    return out


@kernel
def _blend_kernel(img, target, factor, out):
    # out = round(factor * img + (1 - factor) * target), clamped.
    h = img.shape[0]
    w = img.shape[1]
    for y in range(h):
        for x in range(w):
            for c in range(3):
                v = int(math.floor(factor * img[y, x, c]
                                   + (1.0 - factor) * target[y, x, c] + 0.5))
                if v < 0:
                    v = 0
                elif v > 255:
                    v = 255
                out[y, x, c] = v


@kernel
def _blend_scalar_kernel(img, target, factor, out):
    h = img.shape[0]
    w = img.shape[1]
    for y in range(h):
        for x in range(w):
            for c in range(3):
                v = int(math.floor(factor * img[y, x, c]
                                   + (1.0 - factor) * target + 0.5))
                if v < 0:
                    v = 0
                elif v > 255:
                    v = 255
                out[y, x, c] = v


@kernel
def _luma_mean(img):
    h = img.shape[0]
    w = img.shape[1]
    acc = 0.0
    for y in range(h):
        for x in range(w):
            acc += (19595 * int(img[y, x, 0]) + 38470 * int(img[y, x, 1])
                    + 7471 * int(img[y, x, 2]) + 32768) >> 16
    return acc / (h * w)


def adjust_brightness(img: np.ndarray, factor: float) -> np.ndarray:
    out = np.empty_like(img)
    _blend_scalar_kernel(img, 0.0, factor, out)
    return out


def adjust_contrast(img: np.ndarray, factor: float) -> np.ndarray:
    out = np.empty_like(img)
    _blend_scalar_kernel(img, float(_luma_mean(img)), factor, out)
    return out


def adjust_saturation(img: np.ndarray, factor: float) -> np.ndarray:
    out = np.empty_like(img)
    _blend_kernel(img, grayscale(img), factor, out)
    return out


@kernel
def _normalize_kernel(img, mean, std, out):
    h = img.shape[0]
    w = img.shape[1]
    inv255 = np.float32(1.0) / np.float32(255.0)
    for c in range(3):
        m = mean[c]
        s = std[c]
        for y in range(h):
            for x in range(w):
                out[c, y, x] = (np.float32(img[y, x, c]) * inv255 - m) / s


def normalize(img: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """HWC uint8 -> CHW float32, ImageNet mean/std."""
    if out is None:
        out = np.empty((3, img.shape[0], img.shape[1]), np.float32)
    _normalize_kernel(img, IMAGENET_MEAN, IMAGENET_STD, out)
    return out


def denormalize(chw: np.ndarray) -> np.ndarray:
    """Inverse of normalize, back to [0, 1] floats (not uint8)."""
    return chw * IMAGENET_STD[:, None, None] + IMAGENET_MEAN[:, None, None]


def hflip(img: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(img[:, ::-1])
