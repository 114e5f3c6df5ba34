import { describe, expect, it } from "vitest";
import { frameIndex, Scrubber } from "../src/scrub.js";

describe("frameIndex", () => {
  it("position 0 -> frame 0 and position 1 -> last frame", () => {
    expect(frameIndex(0, 5)).toBe(0);
    expect(frameIndex(1, 5)).toBe(4);
    expect(frameIndex(0, 1)).toBe(0);
    expect(frameIndex(1, 1)).toBe(0);
  });

  it("rounds to the nearest frame", () => {
    expect(frameIndex(0.5, 5)).toBe(2);
    expect(frameIndex(0.6, 2)).toBe(1);
    expect(frameIndex(0.4, 2)).toBe(0);
  });

  it("clamps out-of-range positions", () => {
    expect(frameIndex(-0.3, 4)).toBe(0);
    expect(frameIndex(1.7, 4)).toBe(3);
  });

  it("rejects a non-positive frame count", () => {
    expect(() => frameIndex(0.5, 0)).toThrow();
    expect(() => frameIndex(0.5, 2.5)).toThrow();
  });
});

describe("Scrubber", () => {
  it("a simulated forward drag never steps backward", () => {
    const s = new Scrubber(9);
    // jittery but overall monotone drag positions
    const drag = [0, 0.1, 0.08, 0.2, 0.35, 0.33, 0.5, 0.49, 0.7, 0.69, 0.9, 1];
    let prev = -1;
    for (const p of drag) {
      const f = s.drag(p);
      expect(f).toBeGreaterThanOrEqual(prev);
      prev = f;
    }
    expect(prev).toBe(8);
  });

  it("an explicit seek may go backward", () => {
    const s = new Scrubber(5);
    s.drag(1);
    expect(s.seek(0)).toBe(0);
  });

  it("a genuine backward drag rewinds", () => {
    const s = new Scrubber(5);
    s.drag(1);
    s.seek(1);
    expect(s.drag(0.2)).toBe(1);
  });
});
