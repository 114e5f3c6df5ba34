/** Overlay rendering: box, mask fill, axis line, affordance heatmap, and a
 * label chip marker, all composited into a transparent Raster layer that the
 * app blits above the photo.
 */

import type { PointPrediction } from "./types.js";
import { axisToSegment } from "./axis.js";
import { rleDecode } from "./rle.js";
import { decodeQuantizedGrid, hot, normalizeGrid } from "./colormap.js";
import {
  Raster,
  Rgba,
  blendPixel,
  drawLine,
  drawRect,
  fillCircle,
  fillRect,
  makeRaster,
} from "./raster.js";

export const MASK_COLOR: Rgba = [46, 134, 222, Math.round(0.4 * 255)];
export const BOX_COLOR: Rgba = [255, 255, 255, 255];
export const AXIS_COLOR: Rgba = [80, 250, 123, 255];
export const CHIP_BG: Rgba = [20, 20, 20, 230];
export const HEATMAP_ALPHA = 0.55;

export interface OverlayOptions {
  drawMask?: boolean;
  drawBox?: boolean;
  drawAxis?: boolean;
  drawHeatmap?: boolean;
  drawChip?: boolean;
}

const ALL: Required<OverlayOptions> = {
  drawMask: true,
  drawBox: true,
  drawAxis: true,
  drawHeatmap: true,
  drawChip: true,
};

/** The text of the label chip; rendered as DOM in the app, as a block here. */
export function chipLabel(p: PointPrediction): string {
  const parts = [p.movable.label];
  if (p.movable.label !== "fixture") {
    parts.push(p.rigidity.label, p.articulation.label, p.action.label);
  }
  return parts.join(" / ");
}

/** Render one prediction into a fresh transparent layer of the image size. */
export function renderOverlay(
  p: PointPrediction,
  width: number,
  height: number,
  options: OverlayOptions = {},
): Raster {
  const opt = { ...ALL, ...options };
  const layer = makeRaster(width, height);
  const fixture = p.movable.label === "fixture";

  if (opt.drawHeatmap && !fixture && p.affordance.heatmap) {
    const grid = p.affordance.heatmap;
    const values = normalizeGrid(decodeQuantizedGrid(grid));
    for (let y = 0; y < height; y++) {
      for (let x = 0; x < width; x++) {
        const gx = Math.min(grid.width - 1, Math.floor((x / width) * grid.width));
        const gy = Math.min(grid.height - 1, Math.floor((y / height) * grid.height));
        const t = values[gy * grid.width + gx]!;
        if (t <= 0.02) continue; // keep the background photo visible
        const [r, g, b] = hot(t);
        blendPixel(layer, x, y, [r, g, b, Math.round(HEATMAP_ALPHA * t * 255)]);
      }
    }
  }

  if (opt.drawMask && !fixture) {
    const bits = rleDecode(p.mask);
    const mw = p.mask.width;
    const mh = p.mask.height;
    for (let y = 0; y < height; y++) {
      for (let x = 0; x < width; x++) {
        const mx = Math.min(mw - 1, Math.floor((x / width) * mw));
        const my = Math.min(mh - 1, Math.floor((y / height) * mh));
        if (bits[my * mw + mx]) blendPixel(layer, x, y, MASK_COLOR);
      }
    }
  }

  if (opt.drawBox && !fixture) {
    drawRect(
      layer,
      p.box.x1 * width,
      p.box.y1 * height,
      p.box.x2 * width,
      p.box.y2 * height,
      BOX_COLOR,
    );
  }

  if (opt.drawAxis && p.axis) {
    const seg = axisToSegment(p.axis, width, height);
    if (seg) drawLine(layer, seg.x1, seg.y1, seg.x2, seg.y2, AXIS_COLOR, 2);
  }

  if (opt.drawChip) {
    // chip anchor marker; the text itself is a DOM element in the app
    const ax = p.affordance.point.x * width;
    const ay = p.affordance.point.y * height;
    fillRect(layer, ax - 4, ay - 4, ax + 4, ay + 4, CHIP_BG);
    fillCircle(layer, ax, ay, 2, [255, 255, 255, 255]);
  }
  return layer;
}
