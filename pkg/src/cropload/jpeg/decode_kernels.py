"""Hot loops of the JPEG decoder.

Everything here operates on plain numpy arrays and scalar state so the
functions compile under numba and run unchanged under CPython (see
``cropload.kernels``).  Bit-reader state is threaded through explicitly as
``(vpos, buf, cnt)`` tuples: ``vpos`` is a *virtual* byte position that keeps
advancing past the end of the destuffed data (padding with 0xFF), so the
caller can detect truncation as ``8*vpos - cnt > 8*len(data)``.

Coefficient arrays hold quantized values in natural (row-major) order and
are dequantized only in ``reconstruct_blocks``; this lets the baseline and
progressive paths share one reconstruction.

Scan decoders return a status code: 0 ok, 1 bad Huffman data, 3 missing
restart marker.
"""

from __future__ import annotations

import numpy as np

from ..kernels import kernel

_BUF_MASK = 0xFFFFFFFFFF  # 40 bits of bit-reader lookahead


@kernel
def destuff_scan(raw, start, out, restarts):
    """Strip byte stuffing and restart markers from entropy-coded data.

    Returns (clean_length, n_restarts, end) where ``end`` is the index in
    ``raw`` of the terminating marker's 0xFF (or len(raw)).  ``restarts[k]``
    is the clean offset at which the (k+1)-th restart interval begins.
    """
    i = start
    o = 0
    r = 0
    n = raw.shape[0]
    max_r = restarts.shape[0]
    while i < n:
        b = raw[i]
        if b == 0xFF:
            if i + 1 >= n:
                break
            m = raw[i + 1]
            if m == 0x00:
                out[o] = 0xFF
                o += 1
                i += 2
                continue
            if 0xD0 <= m <= 0xD7:
                if r < max_r:
                    restarts[r] = o
                r += 1
                i += 2
                continue
            break
        out[o] = b
        o += 1
        i += 1
    return o, r, i


@kernel
def _br_fill(data, vpos, buf, cnt):
    # Keep at least 25 bits buffered; pad with 0xFF past the end.
    n = data.shape[0]
    while cnt < 25:
        if vpos < n:
            b = int(data[vpos])
        else:
            b = 0xFF
        buf = ((buf << 8) | b) & _BUF_MASK
        cnt += 8
        vpos += 1
    return vpos, buf, cnt


@kernel
def _hd(data, vpos, buf, cnt, lut):
    # Decode one Huffman symbol via a 16-bit lookahead table.
    vpos, buf, cnt = _br_fill(data, vpos, buf, cnt)
    entry = int(lut[(buf >> (cnt - 16)) & 0xFFFF])
    if entry < 0:
        return -1, vpos, buf, cnt
    cnt -= entry & 0xFF
    return entry >> 8, vpos, buf, cnt


@kernel
def _gb(data, vpos, buf, cnt, nbits):
    # Read nbits raw bits (nbits <= 16).
    if nbits == 0:
        return 0, vpos, buf, cnt
    vpos, buf, cnt = _br_fill(data, vpos, buf, cnt)
    v = (buf >> (cnt - nbits)) & ((1 << nbits) - 1)
    cnt -= nbits
    return v, vpos, buf, cnt


@kernel
def _extend(v, size):
    # Map a raw magnitude field to its signed coefficient value.
    if size == 0:
        return 0
    if v < (1 << (size - 1)):
        return v - (1 << size) + 1
    return v


@kernel
def decode_scan_baseline(data, restarts, n_restarts, ri,
                         luts, dc_sel, ac_sel, comp_sel, comp_h, comp_v, ns,
                         mx_count, row_stop,
                         c0, c1, c2, nat):
    """Sequential-DCT scan decoder, interleaved or single-component.

    Decodes MCU rows [0, row_stop) into the per-component coefficient
    arrays; a crop decode passes row_stop < the full row count and simply
    stops early.  Returns (status, vpos, cnt) for truncation accounting.
    """
    vpos = 0
    buf = 0
    cnt = 0
    preds = np.zeros(4, np.int64)
    mcu = 0
    rseg = 0
    for my in range(row_stop):
        for mx in range(mx_count):
            if ri > 0 and mcu > 0 and mcu % ri == 0:
                if rseg >= n_restarts:
                    return 3, vpos, cnt
                vpos = int(restarts[rseg])
                buf = 0
                cnt = 0
                rseg += 1
                for s in range(ns):
                    preds[s] = 0
            for s in range(ns):
                ci = comp_sel[s]
                tgt = c0
                if ci == 1:
                    tgt = c1
                elif ci == 2:
                    tgt = c2
                dlut = luts[dc_sel[s]]
                alut = luts[ac_sel[s]]
                vv = int(comp_v[s])
                hh = int(comp_h[s])
                for by in range(vv):
                    brow = my * vv + by
                    for bx in range(hh):
                        bcol = mx * hh + bx
                        sym, vpos, buf, cnt = _hd(data, vpos, buf, cnt, dlut)
                        if sym < 0 or sym > 15:
                            return 1, vpos, cnt
                        dv, vpos, buf, cnt = _gb(data, vpos, buf, cnt, sym)
                        preds[s] += _extend(dv, sym)
                        tgt[brow, bcol, 0] = preds[s]
                        k = 1
                        while k < 64:
                            rs, vpos, buf, cnt = _hd(data, vpos, buf, cnt, alut)
                            if rs < 0:
                                return 1, vpos, cnt
                            r = rs >> 4
                            sz = rs & 15
                            if sz == 0:
                                if r == 15:
                                    k += 16
                                    continue
                                break
                            k += r
                            if k > 63:
                                return 1, vpos, cnt
                            av, vpos, buf, cnt = _gb(data, vpos, buf, cnt, sz)
                            tgt[brow, bcol, nat[k]] = _extend(av, sz)
                            k += 1
            mcu += 1
    return 0, vpos, cnt


@kernel
def decode_scan_dc_first(data, restarts, n_restarts, ri,
                         luts, dc_sel, comp_sel, comp_h, comp_v, ns,
                         mx_count, my_count, al,
                         c0, c1, c2):
    """Progressive DC scan, first pass (Ah == 0)."""
    vpos = 0
    buf = 0
    cnt = 0
    preds = np.zeros(4, np.int64)
    mcu = 0
    rseg = 0
    for my in range(my_count):
        for mx in range(mx_count):
            if ri > 0 and mcu > 0 and mcu % ri == 0:
                if rseg >= n_restarts:
                    return 3, vpos, cnt
                vpos = int(restarts[rseg])
                buf = 0
                cnt = 0
                rseg += 1
                for s in range(ns):
                    preds[s] = 0
            for s in range(ns):
                ci = comp_sel[s]
                tgt = c0
                if ci == 1:
                    tgt = c1
                elif ci == 2:
                    tgt = c2
                dlut = luts[dc_sel[s]]
                vv = int(comp_v[s])
                hh = int(comp_h[s])
                for by in range(vv):
                    brow = my * vv + by
                    for bx in range(hh):
                        bcol = mx * hh + bx
                        sym, vpos, buf, cnt = _hd(data, vpos, buf, cnt, dlut)
                        if sym < 0 or sym > 15:
                            return 1, vpos, cnt
                        dv, vpos, buf, cnt = _gb(data, vpos, buf, cnt, sym)
                        preds[s] += _extend(dv, sym)
                        tgt[brow, bcol, 0] = preds[s] << al
            mcu += 1
    return 0, vpos, cnt


@kernel
def decode_scan_dc_refine(data, restarts, n_restarts, ri,
                          comp_sel, comp_h, comp_v, ns,
                          mx_count, my_count, al,
                          c0, c1, c2):
    """Progressive DC scan, refinement pass: one bit per block."""
    vpos = 0
    buf = 0
    cnt = 0
    p1 = 1 << al
    mcu = 0
    rseg = 0
    for my in range(my_count):
        for mx in range(mx_count):
            if ri > 0 and mcu > 0 and mcu % ri == 0:
                if rseg >= n_restarts:
                    return 3, vpos, cnt
                vpos = int(restarts[rseg])
                buf = 0
                cnt = 0
                rseg += 1
            for s in range(ns):
                ci = comp_sel[s]
                tgt = c0
                if ci == 1:
                    tgt = c1
                elif ci == 2:
                    tgt = c2
                vv = int(comp_v[s])
                hh = int(comp_h[s])
                for by in range(vv):
                    brow = my * vv + by
                    for bx in range(hh):
                        bcol = mx * hh + bx
                        bit, vpos, buf, cnt = _gb(data, vpos, buf, cnt, 1)
                        if bit != 0:
                            tgt[brow, bcol, 0] |= p1
            mcu += 1
    return 0, vpos, cnt


@kernel
def decode_scan_ac_first(data, restarts, n_restarts, ri,
                         lut, bw, bh, ss, se, al, tgt, nat):
    """Progressive AC scan, first pass, with end-of-band runs."""
    vpos = 0
    buf = 0
    cnt = 0
    eobrun = 0
    blk = 0
    rseg = 0
    for brow in range(bh):
        for bcol in range(bw):
            if ri > 0 and blk > 0 and blk % ri == 0:
                if rseg >= n_restarts:
                    return 3, vpos, cnt
                vpos = int(restarts[rseg])
                buf = 0
                cnt = 0
                rseg += 1
                eobrun = 0
            if eobrun > 0:
                eobrun -= 1
            else:
                k = ss
                while k <= se:
                    rs, vpos, buf, cnt = _hd(data, vpos, buf, cnt, lut)
                    if rs < 0:
                        return 1, vpos, cnt
                    r = rs >> 4
                    sz = rs & 15
                    if sz == 0:
                        if r != 15:
                            eb = 0
                            if r > 0:
                                eb, vpos, buf, cnt = _gb(data, vpos, buf, cnt, r)
                            eobrun = (1 << r) - 1 + eb
                            break
                        k += 16
                        continue
                    k += r
                    if k > se:
                        return 1, vpos, cnt
                    av, vpos, buf, cnt = _gb(data, vpos, buf, cnt, sz)
                    tgt[brow, bcol, nat[k]] = _extend(av, sz) << al
                    k += 1
            blk += 1
    return 0, vpos, cnt


@kernel
def decode_scan_ac_refine(data, restarts, n_restarts, ri,
                          lut, bw, bh, ss, se, al, tgt, nat):
    """Progressive AC scan, refinement pass (correction bits)."""
    vpos = 0
    buf = 0
    cnt = 0
    p1 = 1 << al
    m1 = (-1) << al
    eobrun = 0
    blk = 0
    rseg = 0
    for brow in range(bh):
        for bcol in range(bw):
            if ri > 0 and blk > 0 and blk % ri == 0:
                if rseg >= n_restarts:
                    return 3, vpos, cnt
                vpos = int(restarts[rseg])
                buf = 0
                cnt = 0
                rseg += 1
                eobrun = 0
            k = ss
            if eobrun == 0:
                while k <= se:
                    rs, vpos, buf, cnt = _hd(data, vpos, buf, cnt, lut)
                    if rs < 0:
                        return 1, vpos, cnt
                    r = rs >> 4
                    sz = rs & 15
                    newval = 0
                    if sz == 0:
                        if r != 15:
                            eb = 0
                            if r > 0:
                                eb, vpos, buf, cnt = _gb(data, vpos, buf, cnt, r)
                            eobrun = (1 << r) + eb
                            break
                        # r == 15: pass over 16 zero-history coefficients
                    else:
                        bit, vpos, buf, cnt = _gb(data, vpos, buf, cnt, 1)
                        newval = p1 if bit != 0 else m1
                    while k <= se:
                        cur = int(tgt[brow, bcol, nat[k]])
                        if cur != 0:
                            bit, vpos, buf, cnt = _gb(data, vpos, buf, cnt, 1)
                            if bit != 0 and (cur & p1) == 0:
                                tgt[brow, bcol, nat[k]] = cur + (p1 if cur >= 0 else m1)
                        else:
                            if r == 0:
                                break
                            r -= 1
                        k += 1
                    if newval != 0 and k <= se:
                        tgt[brow, bcol, nat[k]] = newval
                    k += 1
            if eobrun > 0:
                while k <= se:
                    cur = int(tgt[brow, bcol, nat[k]])
                    if cur != 0:
                        bit, vpos, buf, cnt = _gb(data, vpos, buf, cnt, 1)
                        if bit != 0 and (cur & p1) == 0:
                            tgt[brow, bcol, nat[k]] = cur + (p1 if cur >= 0 else m1)
                    k += 1
                eobrun -= 1
            blk += 1
    return 0, vpos, cnt


# Fixed-point IDCT multipliers, 13-bit scale (classic Loeffler factors).
_F_0_298631336 = 2446
_F_0_390180644 = 3196
_F_0_541196100 = 4433
_F_0_765366865 = 6270
_F_0_899976223 = 7373
_F_1_175875602 = 9633
_F_1_501321110 = 12299
_F_1_847759065 = 15137
_F_1_961570560 = 16069
_F_2_053119869 = 16819
_F_2_562915447 = 20995
_F_3_072711026 = 25172


@kernel
def reconstruct_blocks(coefs, quant, plane, by0, by1, bx0, bx1):
    """Dequantize + fixed-point IDCT for a rectangle of blocks.

    Writes level-shifted, clamped 8-bit samples into ``plane`` at the block
    positions.  Integer arithmetic only, so results are identical on every
    platform and in both kernel modes.
    """
    ws = np.empty(64, np.int64)
    for by in range(by0, by1):
        for bx in range(bx0, bx1):
            # Pass 1: columns of the dequantized block -> ws, scaled by 2^2.
            for col in range(8):
                d0 = int(coefs[by, bx, col]) * int(quant[col])
                d1 = int(coefs[by, bx, col + 8]) * int(quant[col + 8])
                d2 = int(coefs[by, bx, col + 16]) * int(quant[col + 16])
                d3 = int(coefs[by, bx, col + 24]) * int(quant[col + 24])
                d4 = int(coefs[by, bx, col + 32]) * int(quant[col + 32])
                d5 = int(coefs[by, bx, col + 40]) * int(quant[col + 40])
                d6 = int(coefs[by, bx, col + 48]) * int(quant[col + 48])
                d7 = int(coefs[by, bx, col + 56]) * int(quant[col + 56])
                if d1 == 0 and d2 == 0 and d3 == 0 and d4 == 0 \
                        and d5 == 0 and d6 == 0 and d7 == 0:
                    dcval = d0 << 2
                    for i in range(8):
                        ws[col + 8 * i] = dcval
                    continue
                z1 = (d2 + d6) * _F_0_541196100
                t2 = z1 - d6 * _F_1_847759065
                t3 = z1 + d2 * _F_0_765366865
                t0 = (d0 + d4) << 13
                t1 = (d0 - d4) << 13
                t10 = t0 + t3
                t13 = t0 - t3
                t11 = t1 + t2
                t12 = t1 - t2
                o0 = d7
                o1 = d5
                o2 = d3
                o3 = d1
                z1 = o0 + o3
                z2 = o1 + o2
                z3 = o0 + o2
                z4 = o1 + o3
                z5 = (z3 + z4) * _F_1_175875602
                o0 *= _F_0_298631336
                o1 *= _F_2_053119869
                o2 *= _F_3_072711026
                o3 *= _F_1_501321110
                z1 = -z1 * _F_0_899976223
                z2 = -z2 * _F_2_562915447
                z3 = -z3 * _F_1_961570560 + z5
                z4 = -z4 * _F_0_390180644 + z5
                o0 += z1 + z3
                o1 += z2 + z4
                o2 += z2 + z3
                o3 += z1 + z4
                ws[col] = (t10 + o3 + 1024) >> 11
                ws[col + 56] = (t10 - o3 + 1024) >> 11
                ws[col + 8] = (t11 + o2 + 1024) >> 11
                ws[col + 48] = (t11 - o2 + 1024) >> 11
                ws[col + 16] = (t12 + o1 + 1024) >> 11
                ws[col + 40] = (t12 - o1 + 1024) >> 11
                ws[col + 24] = (t13 + o0 + 1024) >> 11
                ws[col + 32] = (t13 - o0 + 1024) >> 11
            # Pass 2: rows of ws -> samples, descale by 2^18, center on 128.
            py = by * 8
            px = bx * 8
            for row in range(8):
                o = row * 8
                w1 = ws[o + 1]
                w2 = ws[o + 2]
                w3 = ws[o + 3]
                w4 = ws[o + 4]
                w5 = ws[o + 5]
                w6 = ws[o + 6]
                w7 = ws[o + 7]
                if w1 == 0 and w2 == 0 and w3 == 0 and w4 == 0 \
                        and w5 == 0 and w6 == 0 and w7 == 0:
                    v = ((ws[o] + 16) >> 5) + 128
                    if v < 0:
                        v = 0
                    elif v > 255:
                        v = 255
                    for i in range(8):
                        plane[py + row, px + i] = v
                    continue
                z1 = (w2 + w6) * _F_0_541196100
                t2 = z1 - w6 * _F_1_847759065
                t3 = z1 + w2 * _F_0_765366865
                t0 = (ws[o] + w4) << 13
                t1 = (ws[o] - w4) << 13
                t10 = t0 + t3
                t13 = t0 - t3
                t11 = t1 + t2
                t12 = t1 - t2
                o0 = w7
                o1 = w5
                o2 = w3
                o3 = w1
                z1 = o0 + o3
                z2 = o1 + o2
                z3 = o0 + o2
                z4 = o1 + o3
                z5 = (z3 + z4) * _F_1_175875602
                o0 *= _F_0_298631336
                o1 *= _F_2_053119869
                o2 *= _F_3_072711026
                o3 *= _F_1_501321110
                z1 = -z1 * _F_0_899976223
                z2 = -z2 * _F_2_562915447
                z3 = -z3 * _F_1_961570560 + z5
                z4 = -z4 * _F_0_390180644 + z5
                o0 += z1 + z3
                o1 += z2 + z4
                o2 += z2 + z3
                o3 += z1 + z4
                ws[o] = ((t10 + o3 + 131072) >> 18) + 128
                ws[o + 7] = ((t10 - o3 + 131072) >> 18) + 128
                ws[o + 1] = ((t11 + o2 + 131072) >> 18) + 128
                ws[o + 6] = ((t11 - o2 + 131072) >> 18) + 128
                ws[o + 2] = ((t12 + o1 + 131072) >> 18) + 128
                ws[o + 5] = ((t12 - o1 + 131072) >> 18) + 128
                ws[o + 3] = ((t13 + o0 + 131072) >> 18) + 128
                ws[o + 4] = ((t13 - o0 + 131072) >> 18) + 128
                for i in range(8):
                    v = ws[o + i]
                    if v < 0:
                        v = 0
                    elif v > 255:
                        v = 255
                    plane[py + row, px + i] = v


@kernel
def ycc_region_to_rgb(yp, cbp, crp,
                      h0, v0, h1, v1, h2, v2, hmax, vmax,
                      x0, y0, out):
    """Upsample (sample replication) + fixed-point YCbCr->RGB for a region.

    ``out`` is (h, w, 3); source pixel (y0+yy, x0+xx) maps into each
    component plane by floor-scaled indices, which keeps every output pixel
    a pure function of its own MCU's samples.
    """
    hh = out.shape[0]
    ww = out.shape[1]
    for yy in range(hh):
        sy = y0 + yy
        ry = sy * v0 // vmax
        by_ = sy * v1 // vmax
        cy_ = sy * v2 // vmax
        for xx in range(ww):
            sx = x0 + xx
            yv = int(yp[ry, sx * h0 // hmax])
            cb = int(cbp[by_, sx * h1 // hmax]) - 128
            cr = int(crp[cy_, sx * h2 // hmax]) - 128
            r = yv + ((91881 * cr + 32768) >> 16)
            g = yv + ((-22554 * cb - 46802 * cr + 32768) >> 16)
            b = yv + ((116130 * cb + 32768) >> 16)
            if r < 0:
                r = 0
            elif r > 255:
                r = 255
            if g < 0:
                g = 0
            elif g > 255:
                g = 255
            if b < 0:
                b = 0
            elif b > 255:
                b = 255
            out[yy, xx, 0] = r
            out[yy, xx, 1] = g
            out[yy, xx, 2] = b


@kernel
def gray_region_to_rgb(yp, x0, y0, out):
    """Replicate a luma-only region into all three output channels."""
    hh = out.shape[0]
    ww = out.shape[1]
    for yy in range(hh):
        for xx in range(ww):
            v = yp[y0 + yy, x0 + xx]
            out[yy, xx, 0] = v
            out[yy, xx, 1] = v
            out[yy, xx, 2] = v
