import { describe, expect, it } from "vitest";
import { readFileSync, existsSync } from "node:fs";
import { PNG } from "pngjs";
import { chipLabel, MASK_COLOR, renderOverlay } from "../src/overlay.js";
import { rleDecode } from "../src/rle.js";
import { getPixel, rasterDiff, type Raster } from "../src/raster.js";
import { predictResponseSchema, type PointPrediction } from "../src/types.js";

const canned = JSON.parse(readFileSync(new URL("../fixtures/canned.json", import.meta.url), "utf8"));
const points = predictResponseSchema.parse(canned.predict).points;
// a movable prediction that carries a rotation axis (composed from canned
// parts so the test does not depend on what the canned model got right)
const withAxis: PointPrediction = {
  ...points.find((p) => p.axis !== null)!,
  movable: { label: "one_hand", probs: { fixture: 0.05, one_hand: 0.9, two_hands: 0.05 } },
  articulation: { label: "rotation", probs: { rotation: 0.9, translation: 0.05, freeform: 0.05 } },
  rigidity: { label: "rigid", probs: { rigid: 0.9, nonrigid: 0.1 } },
};
const W = 128;
const H = 96;

function axisPixelCount(layer: Raster, axisColor: [number, number, number]): number {
  let n = 0;
  for (let y = 0; y < layer.height; y++) {
    for (let x = 0; x < layer.width; x++) {
      const [r, g, b, a] = getPixel(layer, x, y);
      if (a > 0 && Math.abs(r - axisColor[0]) < 30 && Math.abs(g - axisColor[1]) < 30 && Math.abs(b - axisColor[2]) < 30) {
        n++;
      }
    }
  }
  return n;
}

describe("renderOverlay", () => {
  it("axis null -> no axis drawn", () => {
    const noAxis: PointPrediction = { ...withAxis, axis: null };
    const layer = renderOverlay(noAxis, W, H, {
      drawMask: false,
      drawHeatmap: false,
      drawBox: false,
      drawChip: false,
    });
    expect(layer.data.every((v) => v === 0)).toBe(true);
  });

  it("axis present -> a line of axis-colored pixels is drawn", () => {
    const layer = renderOverlay(withAxis, W, H, {
      drawMask: false,
      drawHeatmap: false,
      drawBox: false,
      drawChip: false,
    });
    expect(axisPixelCount(layer, [80, 250, 123])).toBeGreaterThan(20);
  });

  it("mask pixels are filled at 40% opacity", () => {
    const layer = renderOverlay(withAxis, W, H, {
      drawAxis: false,
      drawHeatmap: false,
      drawBox: false,
      drawChip: false,
    });
    const bits = rleDecode(withAxis.mask);
    const mw = withAxis.mask.width;
    let inside = 0;
    for (let y = 0; y < H; y++) {
      for (let x = 0; x < W; x++) {
        const mx = Math.floor((x / W) * mw);
        const my = Math.floor((y / H) * withAxis.mask.height);
        const [, , , a] = getPixel(layer, x, y);
        if (bits[my * mw + mx]) {
          inside++;
          expect(Math.abs(a - MASK_COLOR[3])).toBeLessThanOrEqual(1);
        } else {
          expect(a).toBe(0);
        }
      }
    }
    expect(inside).toBeGreaterThan(0);
  });

  it("fixture predictions draw no box/mask/heatmap", () => {
    const fixture: PointPrediction = {
      ...withAxis,
      axis: null,
      movable: { label: "fixture", probs: { fixture: 1, one_hand: 0, two_hands: 0 } },
    };
    const layer = renderOverlay(fixture, W, H, { drawChip: false });
    expect(layer.data.every((v) => v === 0)).toBe(true);
    expect(chipLabel(fixture)).toBe("fixture");
  });

  it("chip label lists all four properties for movable objects", () => {
    const label = chipLabel(withAxis);
    expect(label.split(" / ")).toHaveLength(4);
    expect(label).toContain(withAxis.movable.label);
  });

  it("matches the stored golden image within 1% pixel diff", () => {
    const goldenPath = new URL("../fixtures/golden_overlay.png", import.meta.url);
    expect(existsSync(goldenPath)).toBe(true);
    const png = PNG.sync.read(readFileSync(goldenPath));
    const golden: Raster = {
      width: png.width,
      height: png.height,
      data: new Uint8ClampedArray(png.data),
    };
    const layer = renderOverlay(withAxis, png.width, png.height);
    expect(rasterDiff(layer, golden)).toBeLessThan(0.01);
  });
});
