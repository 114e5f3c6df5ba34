import { describe, expect, it } from "vitest";
import {
  canvasToImage,
  canvasToNorm,
  imageToCanvas,
  normToCanvas,
  normToPx,
  pxToNorm,
} from "../src/coords.js";

describe("pixel <-> normalized", () => {
  it("pixel centers map to (u + 0.5)/size", () => {
    expect(pxToNorm(0, 100)).toBeCloseTo(0.005, 12);
    expect(pxToNorm(49.5, 100)).toBeCloseTo(0.5, 12);
    expect(normToPx(0.5, 100)).toBeCloseTo(49.5, 12);
  });

  it("round-trips within 0.5 px at several zooms", () => {
    const sizes = [64, 100, 512, 1333];
    const zooms = [0.25, 0.5, 1, 2, 3.7, 8];
    for (const size of sizes) {
      for (const zoom of zooms) {
        const view = { zoom, offsetX: 13.2, offsetY: -7.9 };
        for (let k = 0; k < 50; k++) {
          const u = (k / 49) * (size - 1);
          const { cx, cy } = imageToCanvas(u, u / 2, view);
          const back = canvasToImage(cx, cy, view);
          expect(Math.abs(back.u - u)).toBeLessThan(0.5);
          expect(Math.abs(back.v - u / 2)).toBeLessThan(0.5);

          const x = pxToNorm(u, size);
          const c = normToCanvas(x, x, view, size, size);
          const n = canvasToNorm(c.cx, c.cy, view, size, size);
          expect(Math.abs(n.x - x) * size).toBeLessThan(0.5);
          expect(Math.abs(n.y - x) * size).toBeLessThan(0.5);
        }
      }
    }
  });

  it("clamps clicks outside the photo into [0,1]^2", () => {
    const view = { zoom: 1, offsetX: 0, offsetY: 0 };
    const n = canvasToNorm(-50, 1e4, view, 100, 100);
    expect(n.x).toBe(0);
    expect(n.y).toBe(1);
  });
});
