"""Hot loops of the JPEG encoder (4:2:0 baseline sequential).

Same dual-mode convention as the decode kernels.  The color conversion
and downsampling use libjpeg-style fixed-point arithmetic; the forward DCT
runs in float64 against the pinned basis from ``tables.DCT_BASIS``, so
encoded bytes are identical across runs and platforms.
"""

from __future__ import annotations

import numpy as np

from ..kernels import kernel


@kernel
def rgb_to_ycc_planes(img, yplane, cbfull, crfull):
    """RGB -> full-resolution Y/Cb/Cr planes; Y is edge-padded in place."""
    h = img.shape[0]
    w = img.shape[1]
    ph = yplane.shape[0]
    pw = yplane.shape[1]
    for py in range(ph):
        sy = py if py < h else h - 1
        for px in range(pw):
            sx = px if px < w else w - 1
            r = int(img[sy, sx, 0])
            g = int(img[sy, sx, 1])
            b = int(img[sy, sx, 2])
            yplane[py, px] = (19595 * r + 38470 * g + 7471 * b + 32768) >> 16
            if py < h and px < w:
                cbfull[py, px] = (-11059 * r - 21709 * g + 32768 * b + 8421375) >> 16
                crfull[py, px] = (32768 * r - 27439 * g - 5329 * b + 8421375) >> 16


@kernel
def downsample_h2v2(cfull, cplane):
    """2x2 mean with edge replication; output plane is block-padded."""
    h = cfull.shape[0]
    w = cfull.shape[1]
    ph = cplane.shape[0]
    pw = cplane.shape[1]
    for cy in range(ph):
        y0 = 2 * cy
        y1 = y0 + 1
        if y0 >= h:
            y0 = h - 1
        if y1 >= h:
            y1 = h - 1
        for cx in range(pw):
            x0 = 2 * cx
            x1 = x0 + 1
            if x0 >= w:
                x0 = w - 1
            if x1 >= w:
                x1 = w - 1
            s = int(cfull[y0, x0]) + int(cfull[y0, x1]) \
                + int(cfull[y1, x0]) + int(cfull[y1, x1])
            cplane[cy, cx] = (s + 2) >> 2


@kernel
def fdct_quant_plane(plane, quant, basis, coefs):
    """Forward DCT + quantization (round half away from zero) per block."""
    bh = coefs.shape[0]
    bw = coefs.shape[1]
    blk = np.empty((8, 8), np.float64)
    tmp = np.empty((8, 8), np.float64)
    for by in range(bh):
        for bx in range(bw):
            for i in range(8):
                for j in range(8):
                    blk[i, j] = float(plane[by * 8 + i, bx * 8 + j]) - 128.0
            for u in range(8):
                for j in range(8):
                    acc = 0.0
                    for x in range(8):
                        acc += basis[u, x] * blk[x, j]
                    tmp[u, j] = acc
            for u in range(8):
                for v in range(8):
                    acc = 0.0
                    for j in range(8):
                        acc += tmp[u, j] * basis[v, j]
                    q = float(quant[u * 8 + v])
                    if acc >= 0.0:
                        qv = int(acc / q + 0.5)
                    else:
                        qv = -int(-acc / q + 0.5)
                    coefs[by, bx, u * 8 + v] = qv


@kernel
def _put_bits(out, opos, buf, cnt, code, size):
    # Append `size` bits, emitting stuffed bytes as they complete.
    buf = (buf << size) | code
    cnt += size
    while cnt >= 8:
        b = (buf >> (cnt - 8)) & 0xFF
        out[opos] = b
        opos += 1
        if b == 0xFF:
            out[opos] = 0
            opos += 1
        cnt -= 8
    buf &= (1 << cnt) - 1
    return opos, buf, cnt


@kernel
def _nbits(v):
    n = 0
    while v != 0:
        v >>= 1
        n += 1
    return n


@kernel
def _encode_block(coefs, brow, bcol, pred,
                  dc_co, dc_si, ac_co, ac_si, nat,
                  out, opos, buf, cnt):
    dc = int(coefs[brow, bcol, 0])
    diff = dc - pred
    mag = diff if diff >= 0 else -diff
    s = _nbits(mag)
    opos, buf, cnt = _put_bits(out, opos, buf, cnt, int(dc_co[s]), int(dc_si[s]))
    if s > 0:
        bits = diff if diff >= 0 else diff + (1 << s) - 1
        opos, buf, cnt = _put_bits(out, opos, buf, cnt, bits, s)
    run = 0
    for k in range(1, 64):
        v = int(coefs[brow, bcol, nat[k]])
        if v == 0:
            run += 1
            continue
        while run > 15:
            opos, buf, cnt = _put_bits(out, opos, buf, cnt,
                                       int(ac_co[0xF0]), int(ac_si[0xF0]))
            run -= 16
        mag = v if v >= 0 else -v
        s = _nbits(mag)
        rs = (run << 4) | s
        opos, buf, cnt = _put_bits(out, opos, buf, cnt, int(ac_co[rs]), int(ac_si[rs]))
        bits = v if v >= 0 else v + (1 << s) - 1
        opos, buf, cnt = _put_bits(out, opos, buf, cnt, bits, s)
        run = 0
    if run > 0:
        opos, buf, cnt = _put_bits(out, opos, buf, cnt,
                                   int(ac_co[0]), int(ac_si[0]))
    return dc, opos, buf, cnt


@kernel
def encode_scan_420(cy, ccb, ccr,
                    dly_co, dly_si, aly_co, aly_si,
                    dch_co, dch_si, ach_co, ach_si,
                    nat, ri, out):
    """Interleaved 4:2:0 scan: per MCU 4 luma blocks then Cb then Cr.

    Emits restart markers every ``ri`` MCUs when ri > 0.  Returns the
    number of bytes written.
    """
    mcus_y = ccb.shape[0]
    mcus_x = ccb.shape[1]
    opos = 0
    buf = 0
    cnt = 0
    py = 0
    pcb = 0
    pcr = 0
    mcu = 0
    rst = 0
    for my in range(mcus_y):
        for mx in range(mcus_x):
            if ri > 0 and mcu > 0 and mcu % ri == 0:
                if cnt > 0:
                    opos, buf, cnt = _put_bits(out, opos, buf, cnt,
                                               (1 << (8 - cnt)) - 1, 8 - cnt)
                out[opos] = 0xFF
                out[opos + 1] = 0xD0 + (rst & 7)
                opos += 2
                rst += 1
                py = 0
                pcb = 0
                pcr = 0
            for by in range(2):
                for bx in range(2):
                    py, opos, buf, cnt = _encode_block(
                        cy, my * 2 + by, mx * 2 + bx, py,
                        dly_co, dly_si, aly_co, aly_si, nat, out, opos, buf, cnt)
            pcb, opos, buf, cnt = _encode_block(
                ccb, my, mx, pcb, dch_co, dch_si, ach_co, ach_si,
                nat, out, opos, buf, cnt)
            pcr, opos, buf, cnt = _encode_block(
                ccr, my, mx, pcr, dch_co, dch_si, ach_co, ach_si,
                nat, out, opos, buf, cnt)
            mcu += 1
    if cnt > 0:
        opos, buf, cnt = _put_bits(out, opos, buf, cnt,
                                   (1 << (8 - cnt)) - 1, 8 - cnt)
    return opos
