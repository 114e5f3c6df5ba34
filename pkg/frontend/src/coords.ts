/** Pixel <-> normalized coordinate conversions.
 *
 * Normalized coordinates put pixel centers at ((u + 0.5) / size), matching
 * the service: the center of the top-left pixel of a W-wide image is
 * x = 0.5 / W, and x = 0.5 is always the exact image center.
 */

export interface ViewTransform {
  /** CSS pixels per image pixel. */
  zoom: number;
  /** Canvas position of the image's top-left corner, in CSS pixels. */
  offsetX: number;
  offsetY: number;
}

export const IDENTITY_VIEW: ViewTransform = { zoom: 1, offsetX: 0, offsetY: 0 };

export function pxToNorm(u: number, size: number): number {
  return (u + 0.5) / size;
}

export function normToPx(x: number, size: number): number {
  return x * size - 0.5;
}

/** Canvas (CSS pixel) position -> image pixel position. */
export function canvasToImage(
  cx: number,
  cy: number,
  view: ViewTransform,
): { u: number; v: number } {
  return { u: (cx - view.offsetX) / view.zoom, v: (cy - view.offsetY) / view.zoom };
}

/** Image pixel position -> canvas (CSS pixel) position. */
export function imageToCanvas(
  u: number,
  v: number,
  view: ViewTransform,
): { cx: number; cy: number } {
  return { cx: u * view.zoom + view.offsetX, cy: v * view.zoom + view.offsetY };
}

/** Canvas click -> normalized query point, clamped into [0, 1]^2. */
export function canvasToNorm(
  cx: number,
  cy: number,
  view: ViewTransform,
  imageW: number,
  imageH: number,
): { x: number; y: number } {
  const { u, v } = canvasToImage(cx, cy, view);
  const clamp = (t: number) => Math.min(1, Math.max(0, t));
  return { x: clamp(pxToNorm(u, imageW)), y: clamp(pxToNorm(v, imageH)) };
}

export function normToCanvas(
  x: number,
  y: number,
  view: ViewTransform,
  imageW: number,
  imageH: number,
): { cx: number; cy: number } {
  return imageToCanvas(normToPx(x, imageW), normToPx(y, imageH), view);
}
