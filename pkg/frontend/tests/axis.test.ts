import { describe, expect, it } from "vitest";
import { axisDistance, axisToSegment, clipAxisToUnitSquare } from "../src/axis.js";

describe("axisToSegment", () => {
  it("theta=0, r=0.5 on a 100x100 canvas is the x=50 vertical within 1 px", () => {
    const seg = axisToSegment({ theta: 0, r: 0.5 }, 100, 100)!;
    expect(seg).not.toBeNull();
    expect(Math.abs(seg.x1 - 50)).toBeLessThanOrEqual(1);
    expect(Math.abs(seg.x2 - 50)).toBeLessThanOrEqual(1);
    const ys = [seg.y1, seg.y2].sort((a, b) => a - b);
    expect(ys[1]! - ys[0]!).toBeGreaterThan(90); // spans the canvas
  });

  it("theta=pi/2, r=0.25 is the y=0.25 horizontal", () => {
    const seg = axisToSegment({ theta: Math.PI / 2, r: 0.25 }, 200, 100)!;
    expect(Math.abs(seg.y1 - (0.25 * 100 - 0.5))).toBeLessThanOrEqual(1);
    expect(Math.abs(seg.y2 - seg.y1)).toBeLessThanOrEqual(1e-9);
  });

  it("endpoints satisfy the line equation within 1 px on random axes", () => {
    let produced = 0;
    for (let k = 0; k < 300; k++) {
      const theta = ((k * 997) % 1000) * (Math.PI / 1000);
      const r = (((k * 613) % 1000) / 1000) * 2 - 1;
      const seg = axisToSegment({ theta, r }, 640, 480);
      if (!seg) continue; // line misses the image
      produced++;
      for (const [px, py] of [
        [seg.x1, seg.y1],
        [seg.x2, seg.y2],
      ] as const) {
        const x = (px + 0.5) / 640;
        const y = (py + 0.5) / 480;
        // normalized residual scaled to the larger pixel dimension
        expect(Math.abs(axisDistance({ theta, r }, x, y)) * 640).toBeLessThanOrEqual(1);
      }
    }
    expect(produced).toBeGreaterThan(150);
  });

  it("a line far outside the unit square is not drawn", () => {
    expect(axisToSegment({ theta: 0, r: 5 }, 100, 100)).toBeNull();
    expect(axisToSegment({ theta: Math.PI / 4, r: -2 }, 100, 100)).toBeNull();
  });

  it("clip returns endpoints on the square boundary", () => {
    const seg = clipAxisToUnitSquare({ theta: Math.PI / 4, r: 0.6 })!;
    for (const [x, y] of [
      [seg.x1, seg.y1],
      [seg.x2, seg.y2],
    ] as const) {
      const onEdge =
        Math.abs(x) < 1e-9 || Math.abs(x - 1) < 1e-9 || Math.abs(y) < 1e-9 || Math.abs(y - 1) < 1e-9;
      expect(onEdge).toBe(true);
    }
  });
});
