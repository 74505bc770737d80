"""Container format tests: determinism, integrity, size orderings."""

import shutil
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from cropload.container import (PAYLOAD_ALIGNMENT, BuildSpec, build_container,
                                open_container, scan_source_tree, verify_crcs)
from cropload.errors import CorruptionError, CroploadError, FormatError
from cropload.jpeg import decode_full
from cropload.synth import write_corpus


@pytest.fixture(scope="module")
def mini_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("mini") / "imgs"
    write_corpus(root, 50, classes=3, min_side=140, max_side=280, seed=21)
    return root


@pytest.fixture(scope="module")
def mini_container(mini_corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("minibin") / "mini.bin"
    build_container(BuildSpec(mini_corpus, 256, 90, seed=9), out)
    return out


def test_round_trip_counts_and_bounds(mini_corpus, mini_container):
    files, classes = scan_source_tree(mini_corpus)
    with open_container(mini_container) as h:
        assert len(h) == len(files) == 50
        assert len(classes) == 3
        for i in range(len(h)):
            data, w, hh, label = h.read_sample(i)
            img, _ = decode_full(data)
            assert img.shape == (hh, w, 3)
            assert max(w, hh) <= h.header.max_resolution
            assert 0 <= label < 3


def test_labels_follow_lexicographic_folders(mini_corpus, mini_container):
    files, _ = scan_source_tree(mini_corpus)
    with open_container(mini_container) as h:
        for i, (path, label) in enumerate(files):
            assert int(h.records[i]["label"]) == label


def test_build_deterministic(mini_corpus, tmp_path):
    a = tmp_path / "a.bin"
    b = tmp_path / "b.bin"
    build_container(BuildSpec(mini_corpus, 200, 85, seed=4), a)
    build_container(BuildSpec(mini_corpus, 200, 85, seed=4), b)
    assert a.read_bytes() == b.read_bytes()


def test_quality_size_ordering(mini_corpus, tmp_path):
    sizes = {}
    for q in (90, 95, 100):
        out = tmp_path / f"q{q}.bin"
        s = build_container(BuildSpec(mini_corpus, 256, q, seed=1), out)
        sizes[q] = s.total_bytes
    assert sizes[90] < sizes[95] < sizes[100]


def test_resolution_size_ordering(mini_corpus, tmp_path):
    sizes = {}
    for res in (128, 192, 256):
        out = tmp_path / f"r{res}.bin"
        s = build_container(BuildSpec(mini_corpus, res, 95, seed=1), out)
        sizes[res] = s.total_bytes
    assert sizes[128] < sizes[192] < sizes[256]


def test_no_upscale(tmp_path):
    root = tmp_path / "one"
    (root / "cls").mkdir(parents=True)
    from PIL import Image

    from cropload.synth import synth_image
    Image.fromarray(synth_image(1, 100, 100)).save(root / "cls" / "x.png")
    out = tmp_path / "one.bin"
    build_container(BuildSpec(root, 500, 90), out)
    with open_container(out) as h:
        _, w, hh, _ = h.read_sample(0)
        assert (w, hh) == (100, 100)


def test_header_and_alignment(mini_container):
    with open_container(mini_container) as h:
        hd = h.header
        assert hd.magic == b"ESSL"
        assert hd.version == 1
        assert hd.sample_table_offset % hd.alignment == 0
        assert hd.payload_offset % hd.alignment == 0
        offs = h.records["payload_offset"]
        assert (offs % PAYLOAD_ALIGNMENT == 0).all()
        ends = offs + h.records["payload_length"]
        import os
        assert ends.max() <= os.path.getsize(mini_container)


def test_open_rejects_bad_magic(mini_container, tmp_path):
    bad = tmp_path / "bad.bin"
    raw = bytearray(mini_container.read_bytes())
    raw[0] ^= 0xFF
    bad.write_bytes(raw)
    with pytest.raises(FormatError):
        open_container(bad)


def test_open_rejects_bad_version(mini_container, tmp_path):
    bad = tmp_path / "badver.bin"
    raw = bytearray(mini_container.read_bytes())
    raw[4] = 99
    bad.write_bytes(raw)
    with pytest.raises(FormatError):
        open_container(bad)


def test_truncated_payload_opens_then_fails_on_read(mini_container, tmp_path):
    trunc = tmp_path / "trunc.bin"
    shutil.copyfile(mini_container, trunc)
    with open_container(mini_container) as h:
        last = int(h.records[-1]["payload_offset"]) + 10
        n = len(h)
    with open(trunc, "r+b") as f:
        f.truncate(last)
    with open_container(trunc) as h:
        h.read_sample(0)  # early records still intact
        with pytest.raises(CorruptionError):
            h.read_sample(n - 1)


def test_truncated_table_fails_open(mini_container, tmp_path):
    trunc = tmp_path / "trunc2.bin"
    shutil.copyfile(mini_container, trunc)
    with open(trunc, "r+b") as f:
        f.truncate(4096 + 30)  # mid-table
    with pytest.raises(CorruptionError):
        open_container(trunc)


def test_corrupt_payload_detected(mini_container, tmp_path):
    bad = tmp_path / "flip.bin"
    raw = bytearray(mini_container.read_bytes())
    with open_container(mini_container) as h:
        off = int(h.records[3]["payload_offset"]) + 5
    raw[off] ^= 0x40
    bad.write_bytes(raw)
    with open_container(bad) as h:
        with pytest.raises(CorruptionError, match="sample 3"):
            h.read_sample(3)
    assert verify_crcs(bad) == [3]


def test_index_bounds(mini_container):
    with open_container(mini_container) as h:
        with pytest.raises(IndexError):
            h.read_sample(len(h))
        with pytest.raises(IndexError):
            h.read_sample(-1)


def test_concurrent_random_reads_match_sequential(mini_container):
    with open_container(mini_container) as h:
        seq = [decode_full(h.read_sample(i)[0])[0] for i in range(len(h))]
        order = np.random.default_rng(3).permutation(len(h))
        with ThreadPoolExecutor(max_workers=8) as pool:
            out = list(pool.map(
                lambda i: (i, decode_full(h.read_sample(int(i))[0])[0]), order))
        for i, img in out:
            assert np.array_equal(img, seq[int(i)])


def test_source_tree_errors(tmp_path):
    with pytest.raises(CroploadError):
        scan_source_tree(tmp_path / "missing")
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(CroploadError):
        scan_source_tree(empty)
    flat = tmp_path / "flat"
    (flat / "cls").mkdir(parents=True)
    with pytest.raises(CroploadError):
        scan_source_tree(flat)


def test_unreadable_image_aborts_with_path(tmp_path):
    root = tmp_path / "badimg"
    (root / "cls").mkdir(parents=True)
    bad_path = root / "cls" / "broken.png"
    bad_path.write_bytes(b"this is not an image")
    with pytest.raises(CroploadError, match="broken.png"):
        build_container(BuildSpec(root, 256, 90), tmp_path / "x.bin")
