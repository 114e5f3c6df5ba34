import { describe, expect, it } from "vitest";
import { rleDecode, rleEncode } from "../src/rle.js";

describe("column-major RLE", () => {
  it("decodes a hand-built 2x2 example", () => {
    // column-major bits for [[1,0],[1,1]] (rows) are 1,1,0,1 -> runs 0,2,1,1
    const bits = rleDecode({ width: 2, height: 2, counts: [0, 2, 1, 1] });
    expect(Array.from(bits)).toEqual([1, 0, 1, 1]);
  });

  it("all-zero and all-one masks", () => {
    expect(Array.from(rleDecode({ width: 3, height: 2, counts: [6] }))).toEqual([0, 0, 0, 0, 0, 0]);
    expect(Array.from(rleDecode({ width: 3, height: 2, counts: [0, 6] }))).toEqual([1, 1, 1, 1, 1, 1]);
  });

  it("encode/decode round-trips on random masks", () => {
    let state = 12345;
    const rand = () => {
      state = (state * 1103515245 + 12345) & 0x7fffffff;
      return state / 0x7fffffff;
    };
    for (let k = 0; k < 50; k++) {
      const w = 1 + Math.floor(rand() * 12);
      const h = 1 + Math.floor(rand() * 12);
      const bits = new Uint8Array(w * h).map(() => (rand() < 0.4 ? 1 : 0));
      const rle = rleEncode(bits, w, h);
      expect(Array.from(rleDecode(rle))).toEqual(Array.from(bits));
      expect(rle.counts.reduce((a, b) => a + b, 0)).toBe(w * h);
    }
  });

  it("rejects counts that do not cover the mask", () => {
    expect(() => rleDecode({ width: 2, height: 2, counts: [1] })).toThrow();
    expect(() => rleDecode({ width: 2, height: 2, counts: [3, 3] })).toThrow();
  });
});
