"""Baseline/progressive JPEG codec with region ("crop") decoding.

``decode_crop`` is the point of the module: for baseline sequential
streams it entropy-decodes only the MCU rows that reach the requested
rectangle and runs dequant/IDCT/color conversion only for intersecting
MCUs, producing pixels bit-identical to cropping a full decode.
Progressive streams (and exotic multi-scan baseline layouts) transparently
fall back to a full decode, flagged in the stats.

The encoder always emits single-scan interleaved 4:2:0 baseline JPEG with
the standard tables, so containers built by this package always hit the
fast path.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..errors import DecodeError
from . import tables
from .decode_kernels import (
    decode_scan_ac_first,
    decode_scan_ac_refine,
    decode_scan_baseline,
    decode_scan_dc_first,
    decode_scan_dc_refine,
    destuff_scan,
    gray_region_to_rgb,
    reconstruct_blocks,
    ycc_region_to_rgb,
)
from .encode_kernels import (
    downsample_h2v2,
    encode_scan_420,
    fdct_quant_plane,
    rgb_to_ycc_planes,
)


@dataclass(frozen=True)
class CropRect:
    """Pixel-space crop window: top-left corner plus size."""

    x: int
    y: int
    w: int
    h: int

    def validate(self, width: int, height: int) -> None:
        if self.w < 1 or self.h < 1 or self.x < 0 or self.y < 0 \
                or self.x + self.w > width or self.y + self.h > height:
            raise ValueError(
                f"crop rect {self} out of bounds for {width}x{height} image")


@dataclass
class DecodeStats:
    """Work counters for one decode call.

    MCUs are counted in the units of the decoded scan (16x16 pixels for
    4:2:0, 8x8 for grayscale).  A full decode reports every MCU as both
    entropy-decoded and reconstructed; multi-scan files count each MCU
    once.
    """

    mcus_entropy_decoded: int
    mcus_reconstructed: int
    fallback_full: bool = False


class _Component:
    __slots__ = ("cid", "h", "v", "tq", "w", "ph", "bw", "bh", "BW", "BH")

    def __init__(self, cid, h, v, tq):
        self.cid = cid
        self.h = h
        self.v = v
        self.tq = tq


class _Scan:
    __slots__ = ("slots", "ss", "se", "ah", "al", "ri", "start", "end")

    def __init__(self, slots, ss, se, ah, al, ri, start, end):
        self.slots = slots  # list of (comp_index, dc_spec, ac_spec)
        self.ss = ss
        self.se = se
        self.ah = ah
        self.al = al
        self.ri = ri
        self.start = start
        self.end = end


class _Frame:
    __slots__ = ("width", "height", "progressive", "comps", "quant", "scans",
                 "hmax", "vmax", "mcus_x", "mcus_y")


def _u16(data, pos):
    if pos + 2 > len(data):
        raise DecodeError("unexpected end of stream", pos)
    return struct.unpack_from(">H", data, pos)[0]


def _entropy_end(data: bytes, pos: int) -> int:
    # Entropy-coded data ends at the first marker that is not a stuffed
    # 0x00 or a restart.
    n = len(data)
    while True:
        pos = data.find(b"\xff", pos)
        if pos < 0 or pos + 1 >= n:
            return n
        m = data[pos + 1]
        if m == 0x00 or 0xD0 <= m <= 0xD7 or m == 0xFF:
            pos += 2 if m != 0xFF else 1
            continue
        return pos


def parse_stream(data: bytes) -> _Frame:
    """Walk the marker structure; no entropy decoding happens here."""
    if len(data) < 4 or data[0] != 0xFF or data[1] != 0xD8:
        raise DecodeError("not a JPEG stream (missing SOI)", 0)
    frame = _Frame()
    frame.quant = {}
    frame.scans = []
    frame.comps = None
    frame.progressive = False
    huff: dict[tuple[int, int], tuple[bytes, bytes]] = {}
    ri = 0
    pos = 2
    n = len(data)
    while pos < n:
        if data[pos] != 0xFF:
            raise DecodeError("expected marker", pos)
        while pos < n and data[pos] == 0xFF:
            pos += 1
        if pos >= n:
            break
        marker = data[pos]
        pos += 1
        if marker == 0xD9:  # EOI
            break
        if marker == 0x01 or 0xD0 <= marker <= 0xD7:
            continue  # parameterless
        seglen = _u16(data, pos)
        if seglen < 2 or pos + seglen > n:
            raise DecodeError("truncated marker segment", pos)
        body = pos + 2
        end = pos + seglen
        if marker == 0xDB:  # DQT
            p = body
            while p < end:
                pq = data[p] >> 4
                tq = data[p] & 15
                p += 1
                count = 64 * (2 if pq == 1 else 1)
                if p + count > end:
                    raise DecodeError("truncated DQT", p)
                q = np.zeros(64, np.int32)
                for k in range(64):
                    if pq == 1:
                        val = (data[p + 2 * k] << 8) | data[p + 2 * k + 1]
                    else:
                        val = data[p + k]
                    q[tables.ZIGZAG_TO_NATURAL[k]] = val
                frame.quant[tq] = q
                p += count
        elif marker == 0xC4:  # DHT
            p = body
            while p < end:
                tc = data[p] >> 4
                th = data[p] & 15
                p += 1
                if p + 16 > end:
                    raise DecodeError("truncated DHT", p)
                bits = data[p:p + 16]
                p += 16
                total = sum(bits)
                if p + total > end:
                    raise DecodeError("truncated DHT", p)
                huff[(tc, th)] = (bits, data[p:p + total])
                p += total
        elif marker in (0xC0, 0xC1, 0xC2):  # SOF0/1/2
            if frame.comps is not None:
                raise DecodeError("multiple SOF markers", pos)
            frame.progressive = marker == 0xC2
            precision = data[body]
            if precision != 8:
                raise DecodeError(f"unsupported precision {precision}", body)
            frame.height = _u16(data, body + 1)
            frame.width = _u16(data, body + 3)
            ncomp = data[body + 5]
            if frame.height == 0 or frame.width == 0:
                raise DecodeError("zero image dimension", body + 1)
            if ncomp not in (1, 3):
                raise DecodeError(f"unsupported component count {ncomp}", body + 5)
            comps = []
            p = body + 6
            for _ in range(ncomp):
                cid = data[p]
                hv = data[p + 1]
                comps.append(_Component(cid, hv >> 4, hv & 15, data[p + 2]))
                p += 3
            for c in comps:
                if c.h not in (1, 2, 4) or c.v not in (1, 2, 4):
                    raise DecodeError(f"unsupported sampling {c.h}x{c.v}", pos)
            frame.comps = comps
        elif marker in (0xC3, 0xC5, 0xC6, 0xC7, 0xC9, 0xCA, 0xCB,
                        0xCD, 0xCE, 0xCF):
            raise DecodeError("unsupported SOF type "
                              f"0x{marker:02X} (not sequential/progressive "
                              "Huffman)", pos)
        elif marker == 0xDD:  # DRI
            ri = _u16(data, body)
        elif marker == 0xDA:  # SOS
            if frame.comps is None:
                raise DecodeError("SOS before SOF", pos)
            ns = data[body]
            p = body + 1
            slots = []
            for _ in range(ns):
                cs = data[p]
                td = data[p + 1] >> 4
                ta = data[p + 1] & 15
                idx = next((i for i, c in enumerate(frame.comps)
                            if c.cid == cs), None)
                if idx is None:
                    raise DecodeError(f"scan references unknown component {cs}", p)
                dc_spec = huff.get((0, td))
                ac_spec = huff.get((1, ta))
                slots.append((idx, dc_spec, ac_spec))
                p += 2
            ss = data[p]
            se = data[p + 1]
            ah = data[p + 2] >> 4
            al = data[p + 2] & 15
            dstart = end
            dend = _entropy_end(data, dstart)
            frame.scans.append(_Scan(slots, ss, se, ah, al, ri, dstart, dend))
            pos = dend
            continue
        pos = end
    if frame.comps is None or not frame.scans:
        raise DecodeError("no image data found", pos)
    _finish_geometry(frame)
    return frame


def _finish_geometry(frame: _Frame) -> None:
    frame.hmax = max(c.h for c in frame.comps)
    frame.vmax = max(c.v for c in frame.comps)
    frame.mcus_x = -(-frame.width // (8 * frame.hmax))
    frame.mcus_y = -(-frame.height // (8 * frame.vmax))
    for c in frame.comps:
        c.w = -(-frame.width * c.h // frame.hmax)
        c.ph = -(-frame.height * c.v // frame.vmax)
        c.bw = -(-c.w // 8)
        c.bh = -(-c.ph // 8)
        c.BW = frame.mcus_x * c.h
        c.BH = frame.mcus_y * c.v


_lut_cache: dict[bytes, np.ndarray] = {}
_stack_cache: dict[tuple, np.ndarray] = {}


def _huff_lut(spec) -> np.ndarray:
    """16-bit lookahead table: entry = (symbol << 8) | code_length, -1 bad."""
    if spec is None:
        raise DecodeError("scan references undefined Huffman table")
    bits, vals = spec
    key = bytes(bits) + bytes(vals)
    lut = _lut_cache.get(key)
    if lut is not None:
        return lut
    lut = np.full(65536, -1, np.int32)
    code = 0
    vi = 0
    for length in range(1, 17):
        for _ in range(bits[length - 1]):
            if code >= (1 << length):
                raise DecodeError("invalid Huffman table (code overflow)")
            start = code << (16 - length)
            lut[start:start + (1 << (16 - length))] = (vals[vi] << 8) | length
            code += 1
            vi += 1
        code <<= 1
    lut.setflags(write=False)
    _lut_cache[key] = lut
    return lut


def _lut_stack(specs) -> np.ndarray:
    keys = tuple(bytes(s[0]) + bytes(s[1]) for s in specs)
    stack = _stack_cache.get(keys)
    if stack is None:
        stack = np.stack([_huff_lut(s) for s in specs])
        _stack_cache[keys] = stack
    return stack


_EMPTY_RESTARTS = np.empty(0, np.int64)


def _destuff(arr: np.ndarray, scan: _Scan, max_restarts: int):
    seg = arr[scan.start:scan.end]
    out = np.empty(seg.shape[0], np.uint8)
    restarts = (np.empty(max_restarts + 2, np.int64)
                if scan.ri > 0 else _EMPTY_RESTARTS)
    clean_len, n_restarts, _ = destuff_scan(seg, 0, out, restarts)
    if scan.ri == 0 and n_restarts > 0:
        raise DecodeError("restart marker without DRI", scan.start)
    if n_restarts > max_restarts + 2:
        raise DecodeError("too many restart markers", scan.start)
    return out[:clean_len], restarts, int(n_restarts)


def _check_consumed(status, vpos, cnt, clean_len, scan: _Scan) -> None:
    if status == 1:
        raise DecodeError("corrupt entropy-coded data",
                          scan.start + min(int(vpos), scan.end - scan.start))
    if status == 3:
        raise DecodeError("missing restart marker", scan.start)
    if 8 * int(vpos) - int(cnt) > 8 * clean_len:
        raise DecodeError("truncated entropy-coded data", scan.end)


def _scan_units(frame: _Frame, scan: _Scan):
    """Grid and per-slot geometry for one scan.

    Interleaved scans step over the frame MCU grid with each component's
    own sampling factors; single-component scans step block by block over
    that component's true block dimensions.
    """
    if len(scan.slots) == 1:
        idx = scan.slots[0][0]
        c = frame.comps[idx]
        return c.bw, c.bh, [(idx, 1, 1)]
    if len(scan.slots) != len(frame.comps):
        raise DecodeError("partially interleaved scans are not supported")
    return (frame.mcus_x, frame.mcus_y,
            [(idx, frame.comps[idx].h, frame.comps[idx].v)
             for idx, _, _ in scan.slots])


def _decode_scans_full(frame: _Frame, arr: np.ndarray, coefs) -> None:
    nat = tables.ZIGZAG_TO_NATURAL
    c0 = coefs[0]
    c1 = coefs[1] if len(coefs) > 1 else coefs[0][:1, :1]
    c2 = coefs[2] if len(coefs) > 2 else coefs[0][:1, :1]
    for scan in frame.scans:
        gx, gy, units = _scan_units(frame, scan)
        max_restarts = (gx * gy) // scan.ri if scan.ri else 0
        data, restarts, n_restarts = _destuff(arr, scan, max_restarts)
        comp_sel = np.array([u[0] for u in units], np.int64)
        comp_h = np.array([u[1] for u in units], np.int64)
        comp_v = np.array([u[2] for u in units], np.int64)
        if not frame.progressive:
            luts = _lut_stack([s[1] for s in scan.slots]
                              + [s[2] for s in scan.slots])
            ns = len(scan.slots)
            dc_sel = np.arange(ns, dtype=np.int64)
            ac_sel = np.arange(ns, 2 * ns, dtype=np.int64)
            status, vpos, cnt = decode_scan_baseline(
                data, restarts, n_restarts, scan.ri,
                luts, dc_sel, ac_sel, comp_sel, comp_h, comp_v, ns,
                gx, gy, c0, c1, c2, nat)
        elif scan.ss == 0:
            if scan.se != 0:
                raise DecodeError("progressive DC scan with Se != 0")
            if scan.ah == 0:
                luts = _lut_stack([s[1] for s in scan.slots])
                dc_sel = np.arange(len(scan.slots), dtype=np.int64)
                status, vpos, cnt = decode_scan_dc_first(
                    data, restarts, n_restarts, scan.ri,
                    luts, dc_sel, comp_sel, comp_h, comp_v, len(scan.slots),
                    gx, gy, scan.al, c0, c1, c2)
            else:
                status, vpos, cnt = decode_scan_dc_refine(
                    data, restarts, n_restarts, scan.ri,
                    comp_sel, comp_h, comp_v, len(scan.slots),
                    gx, gy, scan.al, c0, c1, c2)
        else:
            if len(scan.slots) != 1:
                raise DecodeError("progressive AC scan must be single-component")
            idx = scan.slots[0][0]
            tgt = coefs[idx]
            lut = _huff_lut(scan.slots[0][2])
            fn = decode_scan_ac_first if scan.ah == 0 else decode_scan_ac_refine
            status, vpos, cnt = fn(
                data, restarts, n_restarts, scan.ri,
                lut, gx, gy, scan.ss, scan.se, scan.al, tgt, nat)
        _check_consumed(status, vpos, cnt, data.shape[0], scan)


def _alloc_coefs(frame: _Frame):
    return [np.zeros((c.BH, c.BW, 64), np.int32) for c in frame.comps]


def _quant_for(frame: _Frame, c: _Component) -> np.ndarray:
    q = frame.quant.get(c.tq)
    if q is None:
        raise DecodeError(f"missing quantization table {c.tq}")
    return q


def _reconstruct_region(frame: _Frame, coefs, windows):
    """IDCT the given per-component block windows into sample planes."""
    planes = []
    for c, cf, (by0, by1, bx0, bx1) in zip(frame.comps, coefs, windows):
        plane = np.empty((c.BH * 8, c.BW * 8), np.uint8)
        reconstruct_blocks(cf, _quant_for(frame, c), plane, by0, by1, bx0, bx1)
        planes.append(plane)
    return planes


def _emit_rgb(frame: _Frame, planes, x0, y0, w, h) -> np.ndarray:
    out = np.empty((h, w, 3), np.uint8)
    if len(frame.comps) == 1:
        gray_region_to_rgb(planes[0], x0, y0, out)
        return out
    c0, c1, c2 = frame.comps
    ycc_region_to_rgb(planes[0], planes[1], planes[2],
                      c0.h, c0.v, c1.h, c1.v, c2.h, c2.v,
                      frame.hmax, frame.vmax, x0, y0, out)
    return out


def decode_full(data: bytes) -> tuple[np.ndarray, DecodeStats]:
    """Decode a whole JPEG to interleaved 8-bit RGB."""
    arr = np.frombuffer(data, np.uint8)
    frame = parse_stream(data)
    coefs = _alloc_coefs(frame)
    _decode_scans_full(frame, arr, coefs)
    windows = [(0, c.bh, 0, c.bw) for c in frame.comps]
    planes = _reconstruct_region(frame, coefs, windows)
    rgb = _emit_rgb(frame, planes, 0, 0, frame.width, frame.height)
    total = frame.mcus_x * frame.mcus_y if len(frame.comps) > 1 \
        else frame.comps[0].bw * frame.comps[0].bh
    return rgb, DecodeStats(total, total, False)


def decode_crop(data: bytes, rect: CropRect) -> tuple[np.ndarray, DecodeStats]:
    """Decode only the MCUs needed for ``rect``; bit-exact vs. full decode.

    Entropy decoding stops after the last MCU row intersecting the rect
    (sequential Huffman data cannot be skipped, only cut short);
    reconstruction runs only for intersecting MCUs.  Progressive or
    multi-scan streams fall back to a full decode with
    ``stats.fallback_full`` set.
    """
    arr = np.frombuffer(data, np.uint8)
    frame = parse_stream(data)
    rect.validate(frame.width, frame.height)

    fast = not frame.progressive and len(frame.scans) == 1 \
        and len(frame.scans[0].slots) == len(frame.comps)
    if not fast:
        rgb, _ = _decode_full_parsed(frame, arr)
        region = np.ascontiguousarray(
            rgb[rect.y:rect.y + rect.h, rect.x:rect.x + rect.w])
        total = frame.mcus_x * frame.mcus_y if len(frame.comps) > 1 \
            else frame.comps[0].bw * frame.comps[0].bh
        return region, DecodeStats(total, total, True)

    scan = frame.scans[0]
    gx, gy, units = _scan_units(frame, scan)
    if len(frame.comps) > 1:
        mcu_w = 8 * frame.hmax
        mcu_h = 8 * frame.vmax
    else:
        mcu_w = mcu_h = 8
    mx0 = rect.x // mcu_w
    mx1 = (rect.x + rect.w - 1) // mcu_w
    my0 = rect.y // mcu_h
    my1 = (rect.y + rect.h - 1) // mcu_h

    coefs = _alloc_coefs(frame)
    nat = tables.ZIGZAG_TO_NATURAL
    max_restarts = (gx * gy) // scan.ri if scan.ri else 0
    data_clean, restarts, n_restarts = _destuff(arr, scan, max_restarts)
    comp_sel = np.array([u[0] for u in units], np.int64)
    comp_h = np.array([u[1] for u in units], np.int64)
    comp_v = np.array([u[2] for u in units], np.int64)
    luts = _lut_stack([s[1] for s in scan.slots] + [s[2] for s in scan.slots])
    ns = len(scan.slots)
    c0 = coefs[0]
    c1 = coefs[1] if len(coefs) > 1 else coefs[0][:1, :1]
    c2 = coefs[2] if len(coefs) > 2 else coefs[0][:1, :1]
    status, vpos, cnt = decode_scan_baseline(
        data_clean, restarts, n_restarts, scan.ri,
        luts, np.arange(ns, dtype=np.int64),
        np.arange(ns, 2 * ns, dtype=np.int64),
        comp_sel, comp_h, comp_v, ns, gx, my1 + 1, c0, c1, c2, nat)
    _check_consumed(status, vpos, cnt, data_clean.shape[0], scan)

    windows = []
    for c in frame.comps:
        fh = c.h if len(frame.comps) > 1 else 1
        fv = c.v if len(frame.comps) > 1 else 1
        windows.append((my0 * fv, min((my1 + 1) * fv, c.bh),
                        mx0 * fh, min((mx1 + 1) * fh, c.bw)))
    planes = _reconstruct_region(frame, coefs, windows)
    rgb = _emit_rgb(frame, planes, rect.x, rect.y, rect.w, rect.h)
    stats = DecodeStats((my1 + 1) * gx, (my1 - my0 + 1) * (mx1 - mx0 + 1), False)
    return rgb, stats


def _decode_full_parsed(frame: _Frame, arr: np.ndarray):
    coefs = _alloc_coefs(frame)
    _decode_scans_full(frame, arr, coefs)
    windows = [(0, c.bh, 0, c.bw) for c in frame.comps]
    planes = _reconstruct_region(frame, coefs, windows)
    return _emit_rgb(frame, planes, 0, 0, frame.width, frame.height), None


# ---------------------------------------------------------------------------
# Encoder


def _build_enc_table(grouped):
    bits, vals = tables.huff_spec(grouped)
    co = np.zeros(256, np.int64)
    si = np.zeros(256, np.int64)
    code = 0
    vi = 0
    for length in range(1, 17):
        for _ in range(bits[length - 1]):
            co[vals[vi]] = code
            si[vals[vi]] = length
            code += 1
            vi += 1
        code <<= 1
    return co, si


_DC_LUMA_CO, _DC_LUMA_SI = _build_enc_table(tables.HUFF_DC_LUMA)
_AC_LUMA_CO, _AC_LUMA_SI = _build_enc_table(tables.HUFF_AC_LUMA)
_DC_CHROMA_CO, _DC_CHROMA_SI = _build_enc_table(tables.HUFF_DC_CHROMA)
_AC_CHROMA_CO, _AC_CHROMA_SI = _build_enc_table(tables.HUFF_AC_CHROMA)


def _dqt_segment(ql: np.ndarray, qc: np.ndarray) -> bytes:
    body = bytearray()
    for tq, q in ((0, ql), (1, qc)):
        body.append(tq)
        for k in range(64):
            body.append(int(q[tables.ZIGZAG_TO_NATURAL[k]]))
    return b"\xff\xdb" + struct.pack(">H", len(body) + 2) + bytes(body)


def _dht_segment() -> bytes:
    body = bytearray()
    for tc_th, grouped in ((0x00, tables.HUFF_DC_LUMA),
                           (0x10, tables.HUFF_AC_LUMA),
                           (0x01, tables.HUFF_DC_CHROMA),
                           (0x11, tables.HUFF_AC_CHROMA)):
        bits, vals = tables.huff_spec(grouped)
        body.append(tc_th)
        body.extend(bits)
        body.extend(vals)
    return b"\xff\xc4" + struct.pack(">H", len(body) + 2) + bytes(body)


_APP0_JFIF = (b"\xff\xe0" + struct.pack(">H", 16) + b"JFIF\x00"
              + bytes((1, 1, 0, 0, 1, 0, 1, 0, 0)))


def encode_jpeg(image: np.ndarray, quality: int,
                restart_interval: int = 0) -> bytes:
    """Encode 8-bit RGB as baseline sequential 4:2:0 JPEG.

    Deterministic: identical input always yields identical bytes.
    ``restart_interval`` (in MCUs) exists for decoder testing and is 0 in
    production use.
    """
    img = np.ascontiguousarray(image, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) RGB image, got {img.shape}")
    h, w = img.shape[:2]
    if h < 1 or w < 1:
        raise ValueError("image dimensions must be >= 1")
    ql, qc = tables.quality_scaled_tables(quality)

    mcus_x = -(-w // 16)
    mcus_y = -(-h // 16)
    yplane = np.empty((mcus_y * 16, mcus_x * 16), np.uint8)
    cbfull = np.empty((h, w), np.uint8)
    crfull = np.empty((h, w), np.uint8)
    rgb_to_ycc_planes(img, yplane, cbfull, crfull)
    cbplane = np.empty((mcus_y * 8, mcus_x * 8), np.uint8)
    crplane = np.empty((mcus_y * 8, mcus_x * 8), np.uint8)
    downsample_h2v2(cbfull, cbplane)
    downsample_h2v2(crfull, crplane)

    cy = np.empty((mcus_y * 2, mcus_x * 2, 64), np.int32)
    ccb = np.empty((mcus_y, mcus_x, 64), np.int32)
    ccr = np.empty((mcus_y, mcus_x, 64), np.int32)
    fdct_quant_plane(yplane, ql, tables.DCT_BASIS, cy)
    fdct_quant_plane(cbplane, qc, tables.DCT_BASIS, ccb)
    fdct_quant_plane(crplane, qc, tables.DCT_BASIS, ccr)

    n_blocks = 6 * mcus_x * mcus_y
    bound = n_blocks * 450 + 2048
    if restart_interval > 0:
        bound += 2 * (mcus_x * mcus_y // restart_interval + 1)
    out = np.empty(bound, np.uint8)
    n = encode_scan_420(cy, ccb, ccr,
                        _DC_LUMA_CO, _DC_LUMA_SI, _AC_LUMA_CO, _AC_LUMA_SI,
                        _DC_CHROMA_CO, _DC_CHROMA_SI, _AC_CHROMA_CO,
                        _AC_CHROMA_SI, tables.ZIGZAG_TO_NATURAL,
                        restart_interval, out)

    head = bytearray()
    head += b"\xff\xd8"
    head += _APP0_JFIF
    head += _dqt_segment(ql, qc)
    head += b"\xff\xc0" + struct.pack(">HBHHB", 17, 8, h, w, 3)
    head += bytes((1, 0x22, 0))
    head += bytes((2, 0x11, 1))
    head += bytes((3, 0x11, 1))
    head += _dht_segment()
    if restart_interval > 0:
        head += b"\xff\xdd" + struct.pack(">HH", 4, restart_interval)
    head += b"\xff\xda" + struct.pack(">HB", 12, 3)
    head += bytes((1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0))
    return bytes(head) + out[:int(n)].tobytes() + b"\xff\xd9"
