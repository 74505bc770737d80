"""Constant tables for the baseline JPEG codec.

Quantization matrices and Huffman code assignments are the standard ones
from the JPEG specification (Annex K).  Huffman tables are written here
grouped by code length (index i holds the symbols whose code is i+1 bits
long), which is also how a DHT segment stores them.
"""

from __future__ import annotations

import numpy as np

# Natural (row-major) position of the k-th coefficient in zigzag order.
ZIGZAG_TO_NATURAL = np.array([
     0,  1,  8, 16,  9,  2,  3, 10,
    17, 24, 32, 25, 18, 11,  4,  5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13,  6,  7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
], dtype=np.int64)

NATURAL_TO_ZIGZAG = np.argsort(ZIGZAG_TO_NATURAL).astype(np.int64)

# Annex K base quantization matrices, natural order.
QUANT_LUMA = np.array([
    16,  11,  10,  16,  24,  40,  51,  61,
    12,  12,  14,  19,  26,  58,  60,  55,
    14,  13,  16,  24,  40,  57,  69,  56,
    14,  17,  22,  29,  51,  87,  80,  62,
    18,  22,  37,  56,  68, 109, 103,  77,
    24,  35,  55,  64,  81, 104, 113,  92,
    49,  64,  78,  87, 103, 121, 120, 101,
    72,  92,  95,  98, 112, 100, 103,  99,
], dtype=np.int32)

QUANT_CHROMA = np.array([
    17,  18,  24,  47,  99,  99,  99,  99,
    18,  21,  26,  66,  99,  99,  99,  99,
    24,  26,  56,  99,  99,  99,  99,  99,
    47,  66,  99,  99,  99,  99,  99,  99,
    99,  99,  99,  99,  99,  99,  99,  99,
    99,  99,  99,  99,  99,  99,  99,  99,
    99,  99,  99,  99,  99,  99,  99,  99,
    99,  99,  99,  99,  99,  99,  99,  99,
], dtype=np.int32)

# Standard Huffman tables, symbols grouped by code length (1..16 bits).
HUFF_DC_LUMA = (
    [], [0], [1, 2, 3, 4, 5], [6], [7], [8], [9], [10], [11],
    [], [], [], [], [], [], [],
)
HUFF_DC_CHROMA = (
    [], [0, 1, 2], [3], [4], [5], [6], [7], [8], [9], [10], [11],
    [], [], [], [], [],
)
HUFF_AC_LUMA = (
    [], [1, 2], [3], [0, 4, 17], [5, 18, 33], [49, 65], [6, 19, 81, 97],
    [7, 34, 113], [20, 50, 129, 145, 161], [8, 35, 66, 177, 193],
    [21, 82, 209, 240], [36, 51, 98, 114], [], [], [130],
    [9, 10, 22, 23, 24, 25, 26, 37, 38, 39, 40, 41, 42, 52, 53, 54, 55, 56,
     57, 58, 67, 68, 69, 70, 71, 72, 73, 74, 83, 84, 85, 86, 87, 88, 89, 90,
     99, 100, 101, 102, 103, 104, 105, 106, 115, 116, 117, 118, 119, 120,
     121, 122, 131, 132, 133, 134, 135, 136, 137, 138, 146, 147, 148, 149,
     150, 151, 152, 153, 154, 162, 163, 164, 165, 166, 167, 168, 169, 170,
     178, 179, 180, 181, 182, 183, 184, 185, 186, 194, 195, 196, 197, 198,
     199, 200, 201, 202, 210, 211, 212, 213, 214, 215, 216, 217, 218, 225,
     226, 227, 228, 229, 230, 231, 232, 233, 234, 241, 242, 243, 244, 245,
     246, 247, 248, 249, 250],
)
HUFF_AC_CHROMA = (
    [], [0, 1], [2], [3, 17], [4, 5, 33, 49], [6, 18, 65, 81], [7, 97, 113],
    [19, 34, 50, 129], [8, 20, 66, 145, 161, 177, 193], [9, 35, 51, 82, 240],
    [21, 98, 114, 209], [10, 22, 36, 52], [], [225], [37, 241],
    [23, 24, 25, 26, 38, 39, 40, 41, 42, 53, 54, 55, 56, 57, 58, 67, 68, 69,
     70, 71, 72, 73, 74, 83, 84, 85, 86, 87, 88, 89, 90, 99, 100, 101, 102,
     103, 104, 105, 106, 115, 116, 117, 118, 119, 120, 121, 122, 130, 131,
     132, 133, 134, 135, 136, 137, 138, 146, 147, 148, 149, 150, 151, 152,
     153, 154, 162, 163, 164, 165, 166, 167, 168, 169, 170, 178, 179, 180,
     181, 182, 183, 184, 185, 186, 194, 195, 196, 197, 198, 199, 200, 201,
     202, 210, 211, 212, 213, 214, 215, 216, 217, 218, 226, 227, 228, 229,
     230, 231, 232, 233, 234, 242, 243, 244, 245, 246, 247, 248, 249, 250],
)


def huff_spec(grouped) -> tuple[list[int], list[int]]:
    """Flatten a length-grouped table into (counts per length, symbol list)."""
    bits = [len(g) for g in grouped]
    vals = [v for g in grouped for v in g]
    return bits, vals


def quality_scaled_tables(quality: int) -> tuple[np.ndarray, np.ndarray]:
    """Scale the base matrices for a quality setting in [1, 100].

    Uses the usual libjpeg-style mapping: quality 50 keeps the base tables,
    higher halves them progressively (100 -> all ones), lower multiplies.
    """
    if not 1 <= quality <= 100:
        raise ValueError(f"quality must be in [1, 100], got {quality}")
    if quality < 50:
        scale = 5000 // quality
    else:
        scale = 200 - quality * 2
    out = []
    for base in (QUANT_LUMA, QUANT_CHROMA):
        q = (base * scale + 50) // 100
        out.append(np.clip(q, 1, 255).astype(np.int32))
    return out[0], out[1]


# cos(k*pi/16) for k = 0..7, pinned as hex literals so encoded bytes never
# depend on the platform libm.
_COS_PI16 = (
    1.0,
    float.fromhex("0x1.f6297cff75cb0p-1"),
    float.fromhex("0x1.d906bcf328d46p-1"),
    float.fromhex("0x1.a9b66290ea1a3p-1"),
    float.fromhex("0x1.6a09e667f3bcdp-1"),
    float.fromhex("0x1.1c73b39ae68c9p-1"),
    float.fromhex("0x1.87de2a6aea964p-2"),
    float.fromhex("0x1.8f8b83c69a60dp-3"),
)
_ISQRT2 = float.fromhex("0x1.6a09e667f3bccp-1")

# Orthonormal 8-point DCT-II basis, row u holds c(u)/2 * cos((2x+1)u*pi/16);
# cos((2x+1)u*pi/16) folds onto +-cos(k*pi/16) with k = (2x+1)u mod 32.
DCT_BASIS = np.empty((8, 8), dtype=np.float64)
for _u in range(8):
    _cu = _ISQRT2 if _u == 0 else 1.0
    for _x in range(8):
        _k = ((2 * _x + 1) * _u) % 32
        _sign = 1.0
        if _k > 16:
            _k = 32 - _k
        if _k > 8:
            _k = 16 - _k
            _sign = -1.0
        _base = 0.0 if _k == 8 else _COS_PI16[_k]
        DCT_BASIS[_u, _x] = 0.5 * _cu * _sign * _base
DCT_BASIS.setflags(write=False)
