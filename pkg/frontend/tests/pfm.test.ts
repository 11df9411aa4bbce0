import { describe, expect, it } from "vitest";

import { meanAbsDifference, parsePfm } from "../src/pfm.js";

function buildPfm(width: number, height: number, bottomUpRows: number[][]): ArrayBuffer {
  const header = `PF\n${width} ${height}\n-1.0\n`;
  const head = new TextEncoder().encode(header);
  const floats = new Float32Array(bottomUpRows.flat());
  const out = new Uint8Array(head.length + floats.byteLength);
  out.set(head, 0);
  out.set(new Uint8Array(floats.buffer), head.length);
  return out.buffer;
}

describe("parsePfm", () => {
  it("reads dimensions and flips the bottom-up raster", () => {
    // 1x2 image: bottom row first in the file
    const buf = buildPfm(1, 2, [
      [0.1, 0.2, 0.3], // bottom row
      [0.7, 0.8, 0.9], // top row
    ]);
    const img = parsePfm(buf);
    expect(img.width).toBe(1);
    expect(img.height).toBe(2);
    expect(img.channels).toBe(3);
    expect(img.data[0]).toBeCloseTo(0.7, 6); // top row now first
    expect(img.data[3]).toBeCloseTo(0.1, 6);
  });

  it("rejects non-PFM buffers", () => {
    expect(() => parsePfm(new TextEncoder().encode("P6\n1 1\n255\n").buffer)).toThrow();
  });

  it("rejects truncated payloads", () => {
    const buf = buildPfm(2, 2, [[1, 1, 1, 1, 1, 1], [1, 1, 1, 1, 1, 1]]);
    expect(() => parsePfm(buf.slice(0, 24))).toThrow(/truncated/);
  });

  it("measures mean absolute differences", () => {
    const a = parsePfm(buildPfm(1, 1, [[0, 0, 0]]));
    const b = parsePfm(buildPfm(1, 1, [[0.3, 0.3, 0.3]]));
    expect(meanAbsDifference(a, b)).toBeCloseTo(0.3, 6);
  });
});
