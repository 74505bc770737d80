"""The packed dataset file: build, open, random-access reads.

Layout (all integers little-endian):

    offset 0     header, 48 bytes:
                 magic "ESSL" | version u16 | reserved u16 | sample_count u64
                 | sample_table_offset u64 | payload_offset u64
                 | max_resolution u16 | quality u8 | reserved u8
                 | alignment u32 | build_seed u64
    offset 4096  sample table, sample_count x 24-byte records:
                 payload_offset u64 (absolute) | payload_length u32
                 | width u16 | height u16 | label u32 | crc32 u32
    then         payload region, first payload at the next 4096 boundary,
                 every payload aligned to 64 bytes.

Every image is re-encoded at build time by the internal JPEG encoder
(downscaled so its largest side fits max_resolution, never upscaled), so a
single codec governs all stored pixels.  Builds are byte-deterministic:
same BuildSpec, same bytes.
"""

from __future__ import annotations

import mmap
import os
import struct
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptionError, CroploadError, FormatError
from .imgops import resize_bilinear
from .jpeg import encode_jpeg

MAGIC = b"ESSL"
VERSION = 1
TABLE_ALIGNMENT = 4096
PAYLOAD_ALIGNMENT = 64

_HEADER_FMT = "<4sHHQQQHBBIQ"
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)  # 48

RECORD_DTYPE = np.dtype({
    "names": ["payload_offset", "payload_length", "width", "height",
              "label", "checksum"],
    "formats": ["<u8", "<u4", "<u2", "<u2", "<u4", "<u4"],
})
assert RECORD_DTYPE.itemsize == 24

IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png", ".bmp", ".ppm", ".webp"}


@dataclass(frozen=True)
class ContainerHeader:
    magic: bytes
    version: int
    sample_count: int
    sample_table_offset: int
    payload_offset: int
    max_resolution: int
    quality: int
    alignment: int
    build_seed: int


@dataclass(frozen=True)
class BuildSpec:
    """What to pack: a class-subfolder image tree plus compression knobs."""

    source: str | Path
    max_resolution: int
    quality: int
    seed: int = 0

    def __post_init__(self):
        if self.max_resolution < 64:
            raise ValueError("max_resolution must be >= 64")
        if not 1 <= self.quality <= 100:
            raise ValueError("quality must be in [1, 100]")


@dataclass(frozen=True)
class BuildSummary:
    sample_count: int
    total_bytes: int


def scan_source_tree(source: str | Path) -> tuple[list[tuple[Path, int]], list[str]]:
    """Class subfolders in lexicographic order -> contiguous label ids."""
    root = Path(source)
    if not root.is_dir():
        raise CroploadError(f"source directory not found: {root}")
    classes = sorted(p.name for p in root.iterdir() if p.is_dir())
    if not classes:
        raise CroploadError(f"no class subfolders in {root}")
    files: list[tuple[Path, int]] = []
    for label, name in enumerate(classes):
        sub = sorted((root / name).iterdir())
        for f in sub:
            if f.is_file() and f.suffix.lower() in IMAGE_EXTENSIONS:
                files.append((f, label))
    if not files:
        raise CroploadError(f"no images found under {root}")
    return files, classes


def _load_source_image(path: Path) -> np.ndarray:
    from PIL import Image, ImageOps

    try:
        with Image.open(path) as im:
            im = ImageOps.exif_transpose(im)
            return np.asarray(im.convert("RGB"))
    except CroploadError:
        raise
    except Exception as exc:
        raise CroploadError(f"cannot read source image {path}: {exc}") from exc


def fit_to_resolution(img: np.ndarray, max_resolution: int) -> np.ndarray:
    """Downscale so max(side) <= max_resolution; never upscale."""
    h, w = img.shape[:2]
    if max(h, w) <= max_resolution:
        return img
    if w >= h:
        ow = max_resolution
        oh = max(1, int(h * max_resolution / w + 0.5))
    else:
        oh = max_resolution
        ow = max(1, int(w * max_resolution / h + 0.5))
    return resize_bilinear(img, oh, ow)


def build_container(spec: BuildSpec, out_path: str | Path,
                    workers: int | None = None) -> BuildSummary:
    """Pack a source tree into a container file.

    Encoding runs in a thread pool but payloads are assembled strictly in
    source order, keeping output bytes deterministic.
    """
    files, _ = scan_source_tree(spec.source)
    if workers is None:
        workers = os.cpu_count() or 1

    def prepare(item):
        path, label = item
        img = _load_source_image(path)
        img = fit_to_resolution(img, spec.max_resolution)
        payload = encode_jpeg(img, spec.quality)
        return payload, img.shape[1], img.shape[0], label

    n = len(files)
    table_offset = TABLE_ALIGNMENT
    table_size = n * RECORD_DTYPE.itemsize
    payload_base = -(-(table_offset + table_size) // TABLE_ALIGNMENT) * TABLE_ALIGNMENT
    records = np.zeros(n, RECORD_DTYPE)

    out_path = Path(out_path)
    try:
        out = open(out_path, "wb")
    except OSError as exc:
        raise CroploadError(f"cannot write container {out_path}: {exc}") from exc
    with out:
        out.truncate(payload_base)
        out.seek(payload_base)
        pos = payload_base
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, (payload, w, h, label) in enumerate(pool.map(prepare, files,
                                                                chunksize=4)):
                pad = -pos % PAYLOAD_ALIGNMENT
                if pad:
                    out.write(b"\x00" * pad)
                    pos += pad
                records[i] = (pos, len(payload), w, h, label,
                              zlib.crc32(payload))
                out.write(payload)
                pos += len(payload)
        total = pos
        out.seek(0)
        out.write(struct.pack(_HEADER_FMT, MAGIC, VERSION, 0, n,
                              table_offset, payload_base,
                              spec.max_resolution, spec.quality, 0,
                              TABLE_ALIGNMENT, spec.seed))
        out.seek(table_offset)
        out.write(records.tobytes())
    return BuildSummary(n, total)


class ContainerHandle:
    """Open container: validated header plus lock-free random reads.

    Payloads are memory-mapped and only touched by ``read_sample``; any
    number of threads may read concurrently.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        if not self.path.is_file():
            raise CroploadError(f"container not found: {self.path}")
        self._file = open(self.path, "rb")
        try:
            self._size = os.fstat(self._file.fileno()).st_size
            head = self._file.read(_HEADER_SIZE)
            if len(head) < _HEADER_SIZE:
                raise CorruptionError(f"{self.path}: file shorter than header")
            (magic, version, _, count, table_off, payload_off, max_res,
             quality, _, alignment, seed) = struct.unpack(_HEADER_FMT, head)
            if magic != MAGIC:
                raise FormatError(f"{self.path}: bad magic {magic!r}")
            if version != VERSION:
                raise FormatError(f"{self.path}: unsupported version {version}")
            if alignment == 0 or table_off % alignment or payload_off % alignment:
                raise FormatError(f"{self.path}: misaligned section offsets")
            if not 1 <= quality <= 100 or max_res < 64:
                raise FormatError(f"{self.path}: implausible header fields")
            table_end = table_off + count * RECORD_DTYPE.itemsize
            if table_end > self._size or payload_off < table_end:
                raise CorruptionError(f"{self.path}: truncated sample table")
            self.header = ContainerHeader(magic, version, count, table_off,
                                          payload_off, max_res, quality,
                                          alignment, seed)
            self._file.seek(table_off)
            raw = self._file.read(count * RECORD_DTYPE.itemsize)
            self.records = np.frombuffer(raw, RECORD_DTYPE)
            self._mmap = mmap.mmap(self._file.fileno(), 0,
                                   access=mmap.ACCESS_READ) if self._size else None
        except Exception:
            self._file.close()
            raise

    def __len__(self) -> int:
        return int(self.header.sample_count)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self) -> None:
        if self._mmap is not None:
            self._mmap.close()
            self._mmap = None
        self._file.close()

    def read_sample(self, index: int) -> tuple[bytes, int, int, int]:
        """-> (jpeg bytes, width, height, label); CRC-verified."""
        if not 0 <= index < len(self):
            raise IndexError(f"sample index {index} out of range [0, {len(self)})")
        rec = self.records[index]
        off = int(rec["payload_offset"])
        length = int(rec["payload_length"])
        if off % PAYLOAD_ALIGNMENT:
            raise CorruptionError(f"sample {index}: misaligned payload")
        if off + length > self._size:
            raise CorruptionError(
                f"sample {index}: payload extends past end of file "
                f"(truncated container?)")
        payload = self._mmap[off:off + length]
        if zlib.crc32(payload) != int(rec["checksum"]):
            raise CorruptionError(f"sample {index}: checksum mismatch")
        return payload, int(rec["width"]), int(rec["height"]), int(rec["label"])


def open_container(path: str | Path) -> ContainerHandle:
    return ContainerHandle(path)


def verify_crcs(path: str | Path) -> list[int]:
    """Indices of samples whose payload fails its checksum or bounds."""
    bad = []
    with open_container(path) as handle:
        for i in range(len(handle)):
            try:
                handle.read_sample(i)
            except CorruptionError:
                bad.append(i)
    return bad


def inspect_stats(path: str | Path) -> dict:
    """Header plus per-field summary stats, for the `inspect` command."""
    with open_container(path) as handle:
        h = handle.header
        rec = handle.records
        widths = rec["width"].astype(np.int64)
        heights = rec["height"].astype(np.int64)
        lengths = rec["payload_length"].astype(np.int64)
        labels = rec["label"].astype(np.int64)
        return {
            "path": str(handle.path),
            "header": {
                "magic": h.magic.decode("ascii"),
                "version": h.version,
                "sample_count": h.sample_count,
                "sample_table_offset": h.sample_table_offset,
                "payload_offset": h.payload_offset,
                "max_resolution": h.max_resolution,
                "quality": h.quality,
                "alignment": h.alignment,
                "build_seed": h.build_seed,
            },
            "file_bytes": os.path.getsize(path),
            "payload_bytes": int(lengths.sum()),
            "width": {"min": int(widths.min()), "max": int(widths.max()),
                      "mean": float(widths.mean())},
            "height": {"min": int(heights.min()), "max": int(heights.max()),
                       "mean": float(heights.mean())},
            "payload_length": {"min": int(lengths.min()),
                               "max": int(lengths.max()),
                               "mean": float(lengths.mean())},
            "labels": {"distinct": int(np.unique(labels).size),
                       "min": int(labels.min()), "max": int(labels.max())},
        }
