/** LGTE embedding container: writer and reader.
 *
 * Layout (little-endian): "LGTE" magic, u32 version (1), u32 n_frames,
 * u32 dim, f32 row-major frame payload, then a u32 query flag (0 or 1)
 * followed by dim f32 query values when the flag is 1.  A file may end
 * right after the payload with no flag word; that reads as flag 0.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { BindingError, invalidInput } from "./errors.js";

const MAGIC = "LGTE";
const VERSION = 1;
const HEADER_BYTES = 16;

export interface LgteContent {
  nFrames: number;
  dim: number;
  /** Row-major, length nFrames * dim. */
  frames: Float32Array;
  query: Float32Array | null;
}

function checkFinite(values: Float32Array, label: string): void {
  for (let i = 0; i < values.length; i++) {
    if (!Number.isFinite(values[i])) {
      throw new BindingError("non-finite", `${label} contains a non-finite value at index ${i}`);
    }
  }
}

export function writeLgte(
  path: string,
  frames: Float32Array,
  nFrames: number,
  dim: number,
  query: Float32Array | null = null,
): void {
  if (!Number.isInteger(nFrames) || nFrames < 1) {
    throw invalidInput(`n_frames must be a positive integer, got ${nFrames}`);
  }
  if (!Number.isInteger(dim) || dim < 1) {
    throw invalidInput(`dim must be a positive integer, got ${dim}`);
  }
  if (frames.length !== nFrames * dim) {
    throw invalidInput(
      `frame buffer has ${frames.length} values, expected ${nFrames} x ${dim} = ${nFrames * dim}`,
    );
  }
  if (query !== null && query.length !== dim) {
    throw invalidInput(`query buffer has ${query.length} values, expected ${dim}`);
  }
  checkFinite(frames, "frame buffer");
  if (query !== null) checkFinite(query, "query buffer");

  const total = HEADER_BYTES + 4 * frames.length + 4 + (query ? 4 * dim : 0);
  const buf = Buffer.alloc(total);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(VERSION, 4);
  buf.writeUInt32LE(nFrames, 8);
  buf.writeUInt32LE(dim, 12);
  let offset = HEADER_BYTES;
  for (let i = 0; i < frames.length; i++) {
    buf.writeFloatLE(frames[i], offset);
    offset += 4;
  }
  buf.writeUInt32LE(query ? 1 : 0, offset);
  offset += 4;
  if (query) {
    for (let i = 0; i < dim; i++) {
      buf.writeFloatLE(query[i], offset);
      offset += 4;
    }
  }
  try {
    writeFileSync(path, buf);
  } catch (err) {
    throw new BindingError("io-error", `cannot write ${path}: ${String(err)}`, 3);
  }
}

export function readLgte(path: string): LgteContent {
  let buf: Buffer;
  try {
    buf = readFileSync(path);
  } catch (err) {
    throw new BindingError("io-error", `cannot read ${path}: ${String(err)}`, 3);
  }
  if (buf.length < HEADER_BYTES) {
    throw new BindingError("truncated", `${path}: file shorter than the 16-byte header`);
  }
  if (buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new BindingError("bad-magic", `${path}: expected LGTE magic`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) {
    throw new BindingError("bad-version", `${path}: unsupported version ${version}`);
  }
  const nFrames = buf.readUInt32LE(8);
  const dim = buf.readUInt32LE(12);
  if (nFrames < 1 || dim < 1) {
    throw invalidInput(`${path}: n_frames and dim must be at least 1`);
  }
  const payloadEnd = HEADER_BYTES + 4 * nFrames * dim;
  if (buf.length < payloadEnd) {
    throw new BindingError("truncated", `${path}: frame payload cut short`);
  }
  const frames = new Float32Array(nFrames * dim);
  for (let i = 0; i < frames.length; i++) {
    frames[i] = buf.readFloatLE(HEADER_BYTES + 4 * i);
  }
  let query: Float32Array | null = null;
  let offset = payloadEnd;
  if (offset < buf.length) {
    const flag = buf.readUInt32LE(offset);
    offset += 4;
    if (flag !== 0 && flag !== 1) {
      throw invalidInput(`${path}: query flag must be 0 or 1, got ${flag}`);
    }
    if (flag === 1) {
      if (buf.length < offset + 4 * dim) {
        throw new BindingError("truncated", `${path}: query block cut short`);
      }
      query = new Float32Array(dim);
      for (let i = 0; i < dim; i++) {
        query[i] = buf.readFloatLE(offset + 4 * i);
      }
      offset += 4 * dim;
    }
  }
  if (offset !== buf.length) {
    throw new BindingError("trailing-data", `${path}: ${buf.length - offset} bytes after content`);
  }
  checkFinite(frames, `${path}: frame payload`);
  if (query) checkFinite(query, `${path}: query block`);
  return { nFrames, dim, frames, query };
}
