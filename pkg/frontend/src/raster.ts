/** A minimal RGBA pixel buffer with alpha-over compositing.
 *
 * All overlay drawing targets this structure so the exact same code runs in
 * the browser (blitted into a canvas ImageData) and in node tests.
 */

export interface Raster {
  width: number;
  height: number;
  /** RGBA, row-major, length = width * height * 4. */
  data: Uint8ClampedArray;
}

export function makeRaster(width: number, height: number): Raster {
  return { width, height, data: new Uint8ClampedArray(width * height * 4) };
}

export type Rgba = [number, number, number, number];

/** Source-over blend of one pixel; alpha in [0, 255]. */
export function blendPixel(r: Raster, x: number, y: number, color: Rgba): void {
  const xi = Math.round(x);
  const yi = Math.round(y);
  if (xi < 0 || yi < 0 || xi >= r.width || yi >= r.height) return;
  const i = (yi * r.width + xi) * 4;
  const [sr, sg, sb, sa255] = color;
  const sa = sa255 / 255;
  const da = r.data[i + 3]! / 255;
  const oa = sa + da * (1 - sa);
  if (oa <= 0) return;
  r.data[i] = Math.round((sr * sa + r.data[i]! * da * (1 - sa)) / oa);
  r.data[i + 1] = Math.round((sg * sa + r.data[i + 1]! * da * (1 - sa)) / oa);
  r.data[i + 2] = Math.round((sb * sa + r.data[i + 2]! * da * (1 - sa)) / oa);
  r.data[i + 3] = Math.round(oa * 255);
}

export function drawLine(r: Raster, x1: number, y1: number, x2: number, y2: number, color: Rgba, thickness = 1): void {
  const dx = x2 - x1;
  const dy = y2 - y1;
  const steps = Math.max(Math.abs(dx), Math.abs(dy), 1);
  const half = (thickness - 1) / 2;
  for (let i = 0; i <= steps; i++) {
    const t = i / steps;
    const x = x1 + t * dx;
    const y = y1 + t * dy;
    for (let oy = -Math.floor(half); oy <= Math.ceil(half); oy++) {
      for (let ox = -Math.floor(half); ox <= Math.ceil(half); ox++) {
        blendPixel(r, x + ox, y + oy, color);
      }
    }
  }
}

export function drawRect(r: Raster, x1: number, y1: number, x2: number, y2: number, color: Rgba, thickness = 1): void {
  drawLine(r, x1, y1, x2, y1, color, thickness);
  drawLine(r, x2, y1, x2, y2, color, thickness);
  drawLine(r, x2, y2, x1, y2, color, thickness);
  drawLine(r, x1, y2, x1, y1, color, thickness);
}

export function fillRect(r: Raster, x1: number, y1: number, x2: number, y2: number, color: Rgba): void {
  for (let y = Math.max(0, Math.round(y1)); y <= Math.min(r.height - 1, Math.round(y2)); y++) {
    for (let x = Math.max(0, Math.round(x1)); x <= Math.min(r.width - 1, Math.round(x2)); x++) {
      blendPixel(r, x, y, color);
    }
  }
}

export function fillCircle(r: Raster, cx: number, cy: number, radius: number, color: Rgba): void {
  for (let y = Math.floor(cy - radius); y <= Math.ceil(cy + radius); y++) {
    for (let x = Math.floor(cx - radius); x <= Math.ceil(cx + radius); x++) {
      if ((x - cx) ** 2 + (y - cy) ** 2 <= radius * radius) blendPixel(r, x, y, color);
    }
  }
}

export function getPixel(r: Raster, x: number, y: number): Rgba {
  const i = (y * r.width + x) * 4;
  return [r.data[i]!, r.data[i + 1]!, r.data[i + 2]!, r.data[i + 3]!];
}

/** Mean absolute per-channel difference, as a fraction of full scale. */
export function rasterDiff(a: Raster, b: Raster): number {
  if (a.width !== b.width || a.height !== b.height) return 1;
  let sum = 0;
  for (let i = 0; i < a.data.length; i++) {
    sum += Math.abs(a.data[i]! - b.data[i]!);
  }
  return sum / (a.data.length * 255);
}
