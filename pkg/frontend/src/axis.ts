/** Axis line geometry: x*cos(theta) + y*sin(theta) = r in normalized
 * image coordinates, clipped to the image and scaled to pixels.
 */

import type { Axis } from "./types.js";
import { normToPx } from "./coords.js";

export interface Segment {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

const EPS = 1e-12;

/** Intersect the line with the unit square [0,1]^2.
 * Returns null when the line misses the square entirely.
 */
export function clipAxisToUnitSquare(axis: Axis): Segment | null {
  const c = Math.cos(axis.theta);
  const s = Math.sin(axis.theta);
  const pts: Array<[number, number]> = [];
  // x = 0 and x = 1 edges
  if (Math.abs(s) > EPS) {
    for (const x of [0, 1]) {
      const y = (axis.r - x * c) / s;
      if (y >= -EPS && y <= 1 + EPS) pts.push([x, Math.min(1, Math.max(0, y))]);
    }
  }
  // y = 0 and y = 1 edges
  if (Math.abs(c) > EPS) {
    for (const y of [0, 1]) {
      const x = (axis.r - y * s) / c;
      if (x >= -EPS && x <= 1 + EPS) pts.push([Math.min(1, Math.max(0, x)), y]);
    }
  }
  // dedupe corner hits
  const uniq: Array<[number, number]> = [];
  for (const p of pts) {
    if (!uniq.some((q) => Math.abs(q[0] - p[0]) < 1e-9 && Math.abs(q[1] - p[1]) < 1e-9)) {
      uniq.push(p);
    }
  }
  if (uniq.length < 2) return null;
  // take the farthest-apart pair to be robust to extra corner duplicates
  let best: Segment | null = null;
  let bestD = -1;
  for (let i = 0; i < uniq.length; i++) {
    for (let j = i + 1; j < uniq.length; j++) {
      const a = uniq[i]!;
      const b = uniq[j]!;
      const d = (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2;
      if (d > bestD) {
        bestD = d;
        best = { x1: a[0], y1: a[1], x2: b[0], y2: b[1] };
      }
    }
  }
  return bestD > 1e-18 ? best : null;
}

/** Axis -> pixel-space segment on a width x height image.
 * Returns null when the axis misses the image.
 */
export function axisToSegment(axis: Axis, width: number, height: number): Segment | null {
  const seg = clipAxisToUnitSquare(axis);
  if (!seg) return null;
  return {
    x1: normToPx(seg.x1, width),
    y1: normToPx(seg.y1, height),
    x2: normToPx(seg.x2, width),
    y2: normToPx(seg.y2, height),
  };
}

/** Signed distance (in normalized units) from a point to the axis line. */
export function axisDistance(axis: Axis, x: number, y: number): number {
  return x * Math.cos(axis.theta) + y * Math.sin(axis.theta) - axis.r;
}
