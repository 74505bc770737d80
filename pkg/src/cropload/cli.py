"""Command-line entry point.

Subcommands: build, inspect, verify, bench (plus bench diff / bench sweep
/ bench kernels), schedule, stream.  Machine-readable output (JSON, CSV,
or the binary batch stream) goes to stdout; diagnostics go to stderr.

Exit codes: 0 ok, 1 usage error, 2 data error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import struct
import sys
from pathlib import Path

from . import FORMAT_VERSION, __version__
from .bench import (BenchConfig, compression_sweep, diff_datasets,
                    kernel_mode_bench, run_stage_bench, sweep_csv, STAGES)
from .container import (BuildSpec, build_container, inspect_stats,
                        open_container, verify_crcs)
from .cropmath import table_geometry
from .errors import ConfigError, CroploadError
from .pipeline import Loader
from .schedule import emit_schedule, params_for_epoch, scheme_by_name_or_file

STREAM_MAGIC = b"CLDSTRM1"
STREAM_END = b"CLDEND00"


def _json_out(obj) -> None:
    sys.stdout.write(obj if isinstance(obj, str) else json.dumps(obj, indent=2))
    sys.stdout.write("\n")


def _cmd_build(args) -> int:
    spec = BuildSpec(args.src, args.max_res, args.quality, args.seed)
    summary = build_container(spec, args.out, workers=args.workers or None)
    _json_out({"out": str(args.out), "sample_count": summary.sample_count,
               "total_bytes": summary.total_bytes})
    return 0


def _cmd_inspect(args) -> int:
    _json_out(inspect_stats(args.file))
    return 0


def _cmd_verify(args) -> int:
    bad = verify_crcs(args.file)
    report = {"file": str(args.file), "checked": True,
              "corrupt_samples": bad}
    if args.against:
        with open_container(args.file) as handle:
            min_side = int(min(handle.records["width"].min(),
                               handle.records["height"].min()))
        diff = diff_datasets(str(args.file), str(args.against),
                             min(args.size, min_side))
        report["diff"] = {"mean": diff.mean, "max": diff.max,
                          "samples": len(diff.per_sample)}
    _json_out(report)
    if bad:
        print(f"verification failed: {len(bad)} corrupt sample(s)",
              file=sys.stderr)
        return 3
    return 0


def _cmd_schedule(args) -> int:
    scheme = scheme_by_name_or_file(args.scheme)
    if args.geometry:
        lines = ["scheme,stage,res,sigma_lo,sigma_hi,"
                 "perceptual_ratio,apparent_size,table_ratio,table_apparent"]
        for i, st in enumerate(scheme.stages):
            g = table_geometry(st.resolution, st.scale)
            lines.append(
                f"{scheme.name},{i},{st.resolution},{st.scale.sigma_lo},"
                f"{st.scale.sigma_hi},{g.perceptual_ratio:.6f},"
                f"{g.apparent_size:.3f},{g.table_ratio:.6f},"
                f"{g.table_apparent:.3f}")
        sys.stdout.write("\n".join(lines) + "\n")
        return 0
    if args.emit == "json":
        sys.stdout.write(emit_schedule(scheme, args.epochs) + "\n")
    else:
        lines = ["epoch,stage,res,m,aug,sigma_lo,sigma_hi"]
        for e in range(args.epochs):
            p = params_for_epoch(scheme, e, args.epochs)
            lines.append(f"{e},{p.stage},{p.resolution},{p.masking_ratio},"
                         f"{p.aug.value},{p.scale.sigma_lo},{p.scale.sigma_hi}")
        sys.stdout.write("\n".join(lines) + "\n")
    return 0


def _cmd_bench_run(args) -> int:
    cfg = BenchConfig(data=args.data, stage=args.stage,
                      batch_size=args.batch, workers=args.workers,
                      warmup_batches=args.warmup, images=args.images,
                      res=args.res, seed=args.seed)
    report = run_stage_bench(cfg)
    text = report.to_json()
    if args.out in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        Path(args.out).write_text(text + "\n")
    return 0


def _cmd_bench_diff(args) -> int:
    diff = diff_datasets(args.a, args.b, args.size)
    sys.stdout.write(diff.to_json(include_samples=args.per_sample) + "\n")
    return 0


def _cmd_bench_sweep(args) -> int:
    res_list = [int(x) for x in args.res.split(",")]
    quality_list = [int(x) for x in args.quality.split(",")]
    rows = compression_sweep(args.src, res_list, quality_list, args.work_dir,
                             bench_images=args.images, seed=args.seed)
    sys.stdout.write(sweep_csv(rows))
    return 0


def _cmd_bench_kernels(args) -> int:
    _json_out(kernel_mode_bench(args.data, images=args.images,
                                batch=args.batch, res=args.res))
    return 0


def _stream_meta(obj, align_to: int) -> bytes:
    raw = json.dumps(obj, separators=(",", ":")).encode()
    pad = -(4 + len(raw) + align_to) % 8
    return struct.pack("<I", len(raw) + pad) + raw + b" " * pad


def _cmd_stream(args) -> int:
    loader = Loader.from_document(Path(args.config))
    cfg = loader.config
    n_batches = loader.batches_per_epoch
    if args.batches is not None:
        n_batches = min(n_batches, args.batches)
    mask_k = loader.mask_spec.masked_count if loader.mask_spec else 0

    if args.digest:
        with loader:
            for bi, batch in enumerate(loader.epoch(args.epoch)):
                if bi >= n_batches:
                    break
                doc = {
                    "batch": bi,
                    "b": len(batch),
                    "epoch": batch.epoch,
                    "mask_k": mask_k,
                    "pixels_sha256": hashlib.sha256(batch.pixels.tobytes()).hexdigest(),
                    "labels_sha256": hashlib.sha256(batch.labels.tobytes()).hexdigest(),
                    "indices_sha256": hashlib.sha256(batch.indices.tobytes()).hexdigest(),
                    "mask_sha256": (hashlib.sha256(batch.mask.tobytes()).hexdigest()
                                    if batch.mask is not None else None),
                }
                sys.stdout.write(json.dumps(doc, separators=(",", ":")) + "\n")
        return 0

    out = sys.stdout.buffer
    written = 0

    def emit(data: bytes):
        nonlocal written
        out.write(data)
        written += len(data)

    emit(STREAM_MAGIC)
    header = {
        "version": 1,
        "batches": n_batches,
        "samples": len(loader),
        "batch_size": cfg.batch_size,
        "res": cfg.res,
        "epoch": args.epoch,
        "mask_k": mask_k,
        "pixel_dtype": "float32",
    }
    emit(_stream_meta(header, written))
    with loader:
        for bi, batch in enumerate(loader.epoch(args.epoch)):
            if bi >= n_batches:
                break
            pixels = batch.pixels.tobytes()
            labels = batch.labels.tobytes()
            indices = batch.indices.tobytes()
            mask = batch.mask.tobytes() if batch.mask is not None else b""
            pad = (-len(mask)) % 8
            segs, off = {}, 0
            for name, blob in (("pixels", pixels), ("labels", labels),
                               ("indices", indices), ("mask", mask)):
                segs[name] = [off, len(blob)]
                off += len(blob)
            payload_len = off + pad
            meta = {"batch": bi, "b": len(batch), "epoch": batch.epoch,
                    "mask_k": mask_k, "payload": payload_len, **segs}
            emit(_stream_meta(meta, written))
            emit(pixels)
            emit(labels)
            emit(indices)
            emit(mask)
            if pad:
                emit(b"\x00" * pad)
    emit(STREAM_END)
    out.flush()
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cropload",
        description="Packed JPEG dataset container with a crop-decoding loader.")
    p.add_argument("--version", action="version",
                   version=f"cropload {__version__} (container format v{FORMAT_VERSION})")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="pack a class-subfolder image tree")
    b.add_argument("--src", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--max-res", type=int, required=True, dest="max_res")
    b.add_argument("--quality", type=int, required=True)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=int, default=0)
    b.set_defaults(fn=_cmd_build)

    i = sub.add_parser("inspect", help="print header and per-field stats as JSON")
    i.add_argument("file")
    i.set_defaults(fn=_cmd_inspect)

    v = sub.add_parser("verify", help="check all payload CRCs")
    v.add_argument("file")
    v.add_argument("--against", help="source tree to diff pixels against")
    v.add_argument("--size", type=int, default=224,
                   help="center-crop size for --against diff")
    v.set_defaults(fn=_cmd_verify)

    s = sub.add_parser("schedule", help="emit schedules / stage geometry")
    s.add_argument("--scheme", required=True,
                   help="built-in name or scheme JSON file")
    s.add_argument("--epochs", type=int, default=100)
    s.add_argument("--emit", choices=("json", "csv"), default="json")
    s.add_argument("--geometry", action="store_true",
                   help="print per-stage crop geometry as CSV instead")
    s.set_defaults(fn=_cmd_schedule)

    be = sub.add_parser("bench", help="throughput and diff measurements")
    bsub = be.add_subparsers(dest="bench_command")

    br = bsub.add_parser("run", help="time one pipeline stage (default)")
    _add_bench_run_args(br)
    br.set_defaults(fn=_cmd_bench_run)

    bd = bsub.add_parser("diff", help="pixel MAE between two image sources")
    bd.add_argument("--a", required=True)
    bd.add_argument("--b", required=True)
    bd.add_argument("--size", type=int, default=224)
    bd.add_argument("--per-sample", action="store_true", dest="per_sample")
    bd.set_defaults(fn=_cmd_bench_diff)

    bs = bsub.add_parser("sweep", help="build+measure a compression grid")
    bs.add_argument("--src", required=True)
    bs.add_argument("--res", required=True, help="comma list, e.g. 256,500")
    bs.add_argument("--quality", required=True, help="comma list, e.g. 90,95,100")
    bs.add_argument("--work-dir", default="sweep_tmp", dest="work_dir")
    bs.add_argument("--images", type=int, default=2000)
    bs.add_argument("--seed", type=int, default=0)
    bs.set_defaults(fn=_cmd_bench_sweep)

    bk = bsub.add_parser("kernels", help="compare jit vs pure-python kernels")
    bk.add_argument("--data", required=True)
    bk.add_argument("--images", type=int, default=64)
    bk.add_argument("--batch", type=int, default=4)
    bk.add_argument("--res", type=int, default=224)
    bk.set_defaults(fn=_cmd_bench_kernels)

    st = sub.add_parser("stream",
                        help="stream batches as binary frames (bindings surface)")
    st.add_argument("--config", required=True, help="loader config JSON file")
    st.add_argument("--epoch", type=int, default=0)
    st.add_argument("--batches", type=int, default=None)
    st.add_argument("--digest", action="store_true",
                    help="print per-batch array digests instead of binary")
    st.set_defaults(fn=_cmd_stream)

    return p


def _add_bench_run_args(br) -> None:
    br.add_argument("--data", required=True)
    br.add_argument("--stage", default="simple",
                    help=f"one of {', '.join(STAGES)} or all")
    br.add_argument("--batch", type=int, default=256)
    br.add_argument("--workers", type=int, default=0)
    br.add_argument("--warmup", type=int, default=2)
    br.add_argument("--images", type=int, default=10_000)
    br.add_argument("--res", type=int, default=224)
    br.add_argument("--seed", type=int, default=0)
    br.add_argument("--out", default=None)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # `bench --data ...` is shorthand for `bench run --data ...`
    if argv and argv[0] == "bench":
        if len(argv) == 1 or argv[1] not in ("run", "diff", "sweep", "kernels",
                                             "-h", "--help"):
            argv.insert(1, "run")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.fn(args)
    except BrokenPipeError:
        return 0
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CroploadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
