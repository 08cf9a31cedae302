import { describe, expect, it } from "vitest";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { BindingError } from "../src/errors";
import { readLgte, writeLgte } from "../src/lgte";

function tempFile(name: string): string {
  return join(mkdtempSync(join(tmpdir(), "lgte-test-")), name);
}

function fixture(): { frames: Float32Array; query: Float32Array } {
  const frames = new Float32Array([0.5, -1.25, 2.0, 0.125, -0.75, 3.5]);
  const query = new Float32Array([1.0, -2.0, 0.25]);
  return { frames, query };
}

describe("container round trip", () => {
  it("preserves frames and query exactly", () => {
    const path = tempFile("clip.lgte");
    const { frames, query } = fixture();
    writeLgte(path, frames, 2, 3, query);
    const back = readLgte(path);
    expect(back.nFrames).toBe(2);
    expect(back.dim).toBe(3);
    expect(Array.from(back.frames)).toEqual(Array.from(frames));
    expect(back.query).not.toBeNull();
    expect(Array.from(back.query!)).toEqual(Array.from(query));
  });

  it("reads a file without a query block", () => {
    const path = tempFile("clip.lgte");
    const { frames } = fixture();
    writeLgte(path, frames, 2, 3);
    const back = readLgte(path);
    expect(back.query).toBeNull();
  });

  it("layout matches the documented byte offsets", () => {
    const path = tempFile("clip.lgte");
    const { frames } = fixture();
    writeLgte(path, frames, 2, 3);
    const raw = readFileSync(path);
    expect(raw.length).toBe(16 + 4 * 6 + 4);
    expect(raw.toString("ascii", 0, 4)).toBe("LGTE");
    expect(raw.readUInt32LE(4)).toBe(1);
    expect(raw.readUInt32LE(8)).toBe(2);
    expect(raw.readUInt32LE(12)).toBe(3);
    expect(raw.readUInt32LE(raw.length - 4)).toBe(0);
  });
});

describe("writer validation", () => {
  it("rejects a frame buffer of the wrong length", () => {
    const err = captureError(() =>
      writeLgte(tempFile("x.lgte"), new Float32Array(5), 2, 3),
    );
    expect(err.code).toBe("invalid-input");
  });

  it("rejects non-finite values", () => {
    const frames = new Float32Array([1, 2, Number.NaN, 4, 5, 6]);
    const err = captureError(() => writeLgte(tempFile("x.lgte"), frames, 2, 3));
    expect(err.code).toBe("non-finite");
  });
});

describe("reader taxonomy", () => {
  function corrupted(mutate: (buf: Buffer) => Buffer): string {
    const path = tempFile("bad.lgte");
    const { frames, query } = fixture();
    writeLgte(path, frames, 2, 3, query);
    writeFileSync(path, mutate(Buffer.from(readFileSync(path))));
    return path;
  }

  it("bad magic", () => {
    const path = corrupted((buf) => {
      buf.write("XGTE", 0, "ascii");
      return buf;
    });
    expect(captureError(() => readLgte(path)).code).toBe("bad-magic");
  });

  it("bad version", () => {
    const path = corrupted((buf) => {
      buf.writeUInt32LE(9, 4);
      return buf;
    });
    expect(captureError(() => readLgte(path)).code).toBe("bad-version");
  });

  it("truncated payload", () => {
    const path = corrupted((buf) => buf.subarray(0, 20));
    expect(captureError(() => readLgte(path)).code).toBe("truncated");
  });

  it("trailing bytes", () => {
    const path = corrupted((buf) => Buffer.concat([buf, Buffer.from("zz")]));
    expect(captureError(() => readLgte(path)).code).toBe("trailing-data");
  });

  it("query flag outside 0/1", () => {
    const path = corrupted((buf) => {
      buf.writeUInt32LE(2, 16 + 4 * 6);
      return buf;
    });
    expect(captureError(() => readLgte(path)).code).toBe("invalid-input");
  });

  it("missing file", () => {
    expect(captureError(() => readLgte("/no/such/file.lgte")).code).toBe("io-error");
  });
});

function captureError(fn: () => unknown): BindingError {
  try {
    fn();
  } catch (err) {
    expect(err).toBeInstanceOf(BindingError);
    return err as BindingError;
  }
  throw new Error("expected a BindingError");
}
