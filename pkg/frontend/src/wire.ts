/**
 * Parser for the cropload batch-stream wire format.
 *
 * Layout (all integers little-endian):
 *
 *   "CLDSTRM1"                          8-byte magic
 *   u32 len | header JSON (padded)      stream header
 *   per batch:
 *     u32 len | meta JSON (padded)      segment offsets, sizes
 *     payload                           pixels | labels | indices | mask
 *   "CLDEND00"                          trailer
 *
 * Meta/header JSON is space-padded so every payload starts 8-byte
 * aligned in the stream; payload buffers here are standalone
 * allocations, so typed-array views over them never need a copy.
 */

export interface StreamHeader {
  version: number;
  batches: number;
  samples: number;
  batch_size: number;
  res: number;
  epoch: number;
  mask_k: number;
  pixel_dtype: string;
}

export interface FrameMeta {
  batch: number;
  b: number;
  epoch: number;
  mask_k: number;
  payload: number;
  pixels: [number, number];
  labels: [number, number];
  indices: [number, number];
  mask: [number, number];
}

export interface Batch {
  /** Batch position within the epoch. */
  index: number;
  epoch: number;
  /** Samples in this batch (the final batch may be short). */
  size: number;
  /** Planar [size, 3, res, res] float32, normalized. */
  pixels: Float32Array;
  labels: BigInt64Array;
  indices: BigInt64Array;
  /** Masked token ids, [size, maskK] row-major. */
  mask: Int32Array;
}

export const STREAM_MAGIC = "CLDSTRM1";
export const STREAM_END = "CLDEND00";

/** Pull-based exact reader over an async chunk stream. */
export class ChunkReader {
  private chunks: Buffer[] = [];
  private offset = 0;
  private done = false;
  private iter: AsyncIterator<Buffer>;

  constructor(source: AsyncIterable<Buffer>) {
    this.iter = source[Symbol.asyncIterator]();
  }

  private available(): number {
    let n = -this.offset;
    for (const c of this.chunks) n += c.length;
    return n;
  }

  private async fill(need: number): Promise<void> {
    while (this.available() < need && !this.done) {
      const { value, done } = await this.iter.next();
      if (done) {
        this.done = true;
        break;
      }
      if (value.length > 0) this.chunks.push(value);
    }
    if (this.available() < need) {
      throw new Error(`stream truncated: needed ${need} more bytes`);
    }
  }

  /**
   * Read exactly n bytes into a standalone buffer (byteOffset 0, so
   * typed-array views at any 8-aligned offset are valid).
   */
  async readExact(n: number): Promise<Buffer> {
    await this.fill(n);
    const out = Buffer.allocUnsafeSlow(n);
    let written = 0;
    while (written < n) {
      const head = this.chunks[0];
      const take = Math.min(head.length - this.offset, n - written);
      head.copy(out, written, this.offset, this.offset + take);
      written += take;
      this.offset += take;
      if (this.offset === head.length) {
        this.chunks.shift();
        this.offset = 0;
      }
    }
    return out;
  }

  async atEnd(): Promise<boolean> {
    while (this.available() === 0 && !this.done) {
      const { value, done } = await this.iter.next();
      if (done) this.done = true;
      else if (value.length > 0) this.chunks.push(value);
    }
    return this.available() === 0;
  }
}

export async function readHeader(reader: ChunkReader): Promise<StreamHeader> {
  const magic = await reader.readExact(8);
  if (magic.toString("latin1") !== STREAM_MAGIC) {
    throw new Error(`bad stream magic: ${magic.toString("hex")}`);
  }
  return (await readJson(reader)) as StreamHeader;
}

async function readJson(reader: ChunkReader): Promise<unknown> {
  const len = (await reader.readExact(4)).readUInt32LE(0);
  const raw = await reader.readExact(len);
  return JSON.parse(raw.toString("utf8"));
}

export async function readFrame(reader: ChunkReader): Promise<Batch> {
  const meta = (await readJson(reader)) as FrameMeta;
  const payload = await reader.readExact(meta.payload);
  const view = <T>(seg: [number, number],
                   make: (b: ArrayBuffer, off: number, len: number) => T,
                   bytesPer: number): T =>
    make(payload.buffer as ArrayBuffer, payload.byteOffset + seg[0],
         seg[1] / bytesPer);
  return {
    index: meta.batch,
    epoch: meta.epoch,
    size: meta.b,
    pixels: view(meta.pixels, (b, o, n) => new Float32Array(b, o, n), 4),
    labels: view(meta.labels, (b, o, n) => new BigInt64Array(b, o, n), 8),
    indices: view(meta.indices, (b, o, n) => new BigInt64Array(b, o, n), 8),
    mask: view(meta.mask, (b, o, n) => new Int32Array(b, o, n), 4),
  };
}

export async function readTrailer(reader: ChunkReader): Promise<void> {
  const end = await reader.readExact(8);
  if (end.toString("latin1") !== STREAM_END) {
    throw new Error(`bad stream trailer: ${end.toString("hex")}`);
  }
}
