"""CLI contract: exit codes, machine-readable output, stream framing."""

import hashlib
import io
import json
import struct
import subprocess
import sys
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from cropload.cli import main


def run_cli(*argv):
    out = io.StringIO()
    err = io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


def test_version():
    code, out, _ = run_cli("--version")
    assert code == 0


def test_help_exits_zero():
    for args in (["--help"], ["build", "--help"], ["bench", "--help"]):
        code, _, _ = run_cli(*args)
        assert code == 0


def test_unknown_flag_is_usage_error():
    code, _, _ = run_cli("inspect", "--bogus-flag", "x")
    assert code == 1


def test_build_inspect_verify_flow(tmp_path, corpus_200_dir):
    out = tmp_path / "cli.bin"
    code, text, _ = run_cli("build", "--src", str(corpus_200_dir), "--out",
                            str(out), "--max-res", "256", "--quality", "90",
                            "--seed", "3")
    assert code == 0
    doc = json.loads(text)
    assert doc["sample_count"] == 200

    code, text, _ = run_cli("inspect", str(out))
    assert code == 0
    doc = json.loads(text)
    assert doc["header"]["magic"] == "ESSL"
    assert doc["header"]["sample_count"] == 200
    assert doc["width"]["max"] <= 256

    code, text, _ = run_cli("verify", str(out))
    assert code == 0
    assert json.loads(text)["corrupt_samples"] == []


def test_verify_corrupt_exits_3(tmp_path, small_container):
    bad = tmp_path / "bad.bin"
    raw = bytearray(small_container.read_bytes())
    raw[-100] ^= 0x10
    bad.write_bytes(raw)
    code, text, err = run_cli("verify", str(bad))
    assert code == 3
    assert json.loads(text)["corrupt_samples"]


def test_verify_missing_exits_2():
    code, _, err = run_cli("verify", "/definitely/missing.bin")
    assert code == 2
    assert "missing.bin" in err


def test_bench_bogus_stage_exit_1(small_container):
    code, _, err = run_cli("bench", "--data", str(small_container),
                           "--stage", "bogus")
    assert code == 1
    assert "read" in err and "crop_decode" in err


def test_schedule_json_emits(capfdbinary=None):
    code, text, _ = run_cli("schedule", "--scheme", "pt_s5", "--epochs", "800",
                            "--emit", "json")
    assert code == 0
    doc = json.loads(text)
    assert len(doc["epochs"]) == 800
    assert doc["epochs"][240]["res"] == 192


def test_schedule_csv_and_geometry():
    code, text, _ = run_cli("schedule", "--scheme", "ft_s1", "--epochs", "100",
                            "--emit", "csv")
    assert code == 0
    lines = text.strip().splitlines()
    assert len(lines) == 101
    assert lines[0].startswith("epoch,")
    code, text, _ = run_cli("schedule", "--scheme", "ft_s3", "--geometry")
    assert code == 0
    rows = text.strip().splitlines()
    assert len(rows) == 4
    assert rows[0].startswith("scheme,stage,res,")


def test_schedule_unknown_scheme_exit_1():
    code, _, _ = run_cli("schedule", "--scheme", "nope")
    assert code == 1


def test_bench_run_json(small_container):
    code, text, _ = run_cli("bench", "--data", str(small_container),
                            "--stage", "read", "--batch", "8", "--images",
                            "80", "--res", "160")
    assert code == 0
    doc = json.loads(text)
    assert doc["throughput"]["read"] > 0


def test_bench_diff_cli(small_container):
    code, text, _ = run_cli("bench", "diff", "--a", str(small_container),
                            "--b", str(small_container), "--size", "96")
    assert code == 0
    doc = json.loads(text)
    assert doc["mean"] == 0.0


def test_bench_kernels_compares_modes(small_container):
    code, text, _ = run_cli("bench", "kernels", "--data", str(small_container),
                            "--images", "40", "--batch", "4", "--res", "160")
    assert code == 0
    doc = json.loads(text)
    assert doc["jit"]["decode"] > 0
    assert doc["numpy"]["decode"] > 0
    # the whole point of the jit path
    assert doc["speedup"] > 2.0


# ---------------------------------------------------------------------------
# stream: the bindings wire surface


def _stream_config(tmp_path, small_container, mask_ratio=0.75):
    cfg = {
        "data": str(small_container),
        "batch_size": 16,
        "workers": 2,
        "seed": 9,
        "res": 96,
        "scale": [0.2, 1.0],
        "ratio": [0.75, 4 / 3],
        "aug": "simple",
        "mask_ratio": mask_ratio,
        "patch": 16,
    }
    p = tmp_path / "loader.json"
    p.write_text(json.dumps(cfg))
    return p


def _read_exact(buf: io.BytesIO, n: int) -> bytes:
    data = buf.read(n)
    assert len(data) == n, "truncated stream"
    return data


def parse_stream(raw: bytes):
    """Reference parser for the batch-stream framing."""
    buf = io.BytesIO(raw)
    assert _read_exact(buf, 8) == b"CLDSTRM1"
    (hlen,) = struct.unpack("<I", _read_exact(buf, 4))
    header = json.loads(_read_exact(buf, hlen))
    batches = []
    for _ in range(header["batches"]):
        (mlen,) = struct.unpack("<I", _read_exact(buf, 4))
        meta = json.loads(_read_exact(buf, mlen))
        payload_off = buf.tell()
        assert payload_off % 8 == 0, "payload not 8-aligned"
        payload = _read_exact(buf, meta["payload"])
        arrays = {}
        for name, dt in (("pixels", np.float32), ("labels", np.int64),
                         ("indices", np.int64), ("mask", np.int32)):
            off, length = meta[name]
            arrays[name] = np.frombuffer(payload[off:off + length], dt)
        batches.append((meta, arrays))
    assert _read_exact(buf, 8) == b"CLDEND00"
    assert buf.read() == b""
    return header, batches


def test_stream_binary_framing(tmp_path, small_container):
    cfg = _stream_config(tmp_path, small_container)
    proc = subprocess.run(
        [sys.executable, "-m", "cropload", "stream", "--config", str(cfg),
         "--epoch", "1", "--batches", "3"],
        capture_output=True, check=True,
        env=_env_with_src(),
    )
    header, batches = parse_stream(proc.stdout)
    assert header["batches"] == 3
    assert header["res"] == 96
    assert header["mask_k"] == 27  # round(0.75 * 36)
    assert len(batches) == 3
    for meta, arrays in batches:
        b = meta["b"]
        assert arrays["pixels"].size == b * 3 * 96 * 96
        assert arrays["labels"].size == b
        assert arrays["mask"].size == b * header["mask_k"]
        assert np.isfinite(arrays["pixels"]).all()


def test_stream_digest_matches_binary(tmp_path, small_container):
    cfg = _stream_config(tmp_path, small_container)
    env = _env_with_src()
    binary = subprocess.run(
        [sys.executable, "-m", "cropload", "stream", "--config", str(cfg),
         "--epoch", "0", "--batches", "2"],
        capture_output=True, check=True, env=env)
    digests = subprocess.run(
        [sys.executable, "-m", "cropload", "stream", "--config", str(cfg),
         "--epoch", "0", "--batches", "2", "--digest"],
        capture_output=True, check=True, env=env, text=True)
    _, batches = parse_stream(binary.stdout)
    lines = [json.loads(l) for l in digests.stdout.strip().splitlines()]
    assert len(lines) == 2
    for (meta, arrays), d in zip(batches, lines):
        assert hashlib.sha256(arrays["pixels"].tobytes()).hexdigest() \
            == d["pixels_sha256"]
        assert hashlib.sha256(arrays["labels"].tobytes()).hexdigest() \
            == d["labels_sha256"]
        assert hashlib.sha256(arrays["mask"].tobytes()).hexdigest() \
            == d["mask_sha256"]


def _env_with_src():
    import os
    env = dict(os.environ)
    src = str(Path(__file__).resolve().parent.parent / "src")
    env["PYTHONPATH"] = src + os.pathsep + env.get("PYTHONPATH", "")
    return env
