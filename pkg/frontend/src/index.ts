/**
 * LoaderSession: consume cropload batches from a training loop.
 *
 * The session spawns the Python CLI (`cropload stream`) and parses its
 * binary frame stream; batch arrays are zero-copy typed-array views over
 * each frame's payload buffer and stay valid until the next `next()`
 * call completes (the previous payload becomes garbage then).
 *
 * Batch content is byte-identical to what the Python pipeline produces
 * for the same config/seed/epoch - that is the loader's determinism
 * contract carried across the process boundary.
 */

import { spawn, ChildProcessWithoutNullStreams } from "node:child_process";

import { Batch, ChunkReader, readFrame, readHeader, readTrailer, StreamHeader } from "./wire.js";

export { Batch, StreamHeader } from "./wire.js";

export interface LoaderSessionOptions {
  /** Path to the loader config JSON (the pipeline's schema). */
  configPath: string;
  epoch?: number;
  /** Cap on batches to stream (default: the whole epoch). */
  batches?: number;
  /** Python interpreter to run the primary package with. */
  python?: string;
  /** Extra PYTHONPATH entry locating the cropload package, if not installed. */
  pythonPath?: string;
}

interface StderrBox {
  text: string;
}

export class LoaderSession {
  readonly header: StreamHeader;
  private reader: ChunkReader;
  private child: ChildProcessWithoutNullStreams;
  private stderr: StderrBox;
  private delivered = 0;
  private finished = false;

  private constructor(child: ChildProcessWithoutNullStreams,
                      reader: ChunkReader, header: StreamHeader,
                      stderr: StderrBox) {
    this.child = child;
    this.reader = reader;
    this.header = header;
    this.stderr = stderr;
  }

  static async open(opts: LoaderSessionOptions): Promise<LoaderSession> {
    const args = ["-m", "cropload", "stream", "--config", opts.configPath,
                  "--epoch", String(opts.epoch ?? 0)];
    if (opts.batches !== undefined) args.push("--batches", String(opts.batches));
    const env = { ...process.env };
    if (opts.pythonPath) {
      env.PYTHONPATH = env.PYTHONPATH
        ? `${opts.pythonPath}:${env.PYTHONPATH}`
        : opts.pythonPath;
    }
    const child = spawn(opts.python ?? "python3", args, { env });
    const stderr: StderrBox = { text: "" };
    child.stderr.setEncoding("utf8");
    child.stderr.on("data", (t: string) => { stderr.text += t; });
    const reader = new ChunkReader(child.stdout);
    try {
      const header = await readHeader(reader);
      return new LoaderSession(child, reader, header, stderr);
    } catch (err) {
      child.kill();
      throw new Error(`failed to open loader stream: ${err}` +
                      (stderr.text ? `\nstderr: ${stderr.text}` : ""));
    }
  }

  get epoch(): number {
    return this.header.epoch;
  }

  /** Batches in this epoch (the stream's declared count). */
  get length(): number {
    return this.header.batches;
  }

  /** Masked tokens per sample under the configured ratio. */
  get maskK(): number {
    return this.header.mask_k;
  }

  /**
   * Next batch, or null at end of epoch.  A truncated or failing
   * producer raises instead, so exhaustion is unambiguous.
   */
  async next(): Promise<Batch | null> {
    if (this.finished) return null;
    if (this.delivered >= this.header.batches) {
      await readTrailer(this.reader);
      this.finished = true;
      return null;
    }
    try {
      const batch = await readFrame(this.reader);
      this.delivered += 1;
      return batch;
    } catch (err) {
      await this.close();
      throw new Error(`stream failed after ${this.delivered} batches: ${err}` +
                      (this.stderr.text ? `\nstderr: ${this.stderr.text}` : ""));
    }
  }

  async *[Symbol.asyncIterator](): AsyncIterator<Batch> {
    for (;;) {
      const batch = await this.next();
      if (batch === null) return;
      yield batch;
    }
  }

  /** Stop the producer; safe to call at any point. */
  async close(): Promise<void> {
    this.finished = true;
    if (this.child.exitCode === null) this.child.kill();
  }
}

/**
 * Convenience: stream one epoch through a callback, closing on errors.
 */
export async function forEachBatch(
  opts: LoaderSessionOptions,
  fn: (batch: Batch) => void | Promise<void>,
): Promise<number> {
  const session = await LoaderSession.open(opts);
  let n = 0;
  try {
    for await (const batch of session) {
      await fn(batch);
      n += 1;
    }
  } finally {
    await session.close();
  }
  return n;
}
