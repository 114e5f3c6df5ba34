/** Hot colormap for heatmap overlays: black -> red -> yellow -> white,
 * mapped over the grid's min -> max range.
 */

export type Rgb = [number, number, number];

/** t in [0, 1] -> hot ramp color. */
export function hot(t: number): Rgb {
  const x = Math.min(1, Math.max(0, t));
  const r = Math.min(1, x / 0.4);
  const g = Math.min(1, Math.max(0, (x - 0.4) / 0.4));
  const b = Math.max(0, (x - 0.8) / 0.2);
  return [Math.round(255 * r), Math.round(255 * g), Math.round(255 * b)];
}

/** Normalize a grid to [0,1] over its own min->max range (flat grids -> 0). */
export function normalizeGrid(values: Float32Array | number[]): Float32Array {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const out = new Float32Array(values.length);
  const span = hi - lo;
  if (span <= 0) return out;
  for (let i = 0; i < values.length; i++) {
    out[i] = ((values as Float32Array)[i]! - lo) / span;
  }
  return out;
}

/** Decode a base64 u8-quantized grid into dequantized floats (row-major). */
export function decodeQuantizedGrid(grid: {
  width: number;
  height: number;
  lo: number;
  hi: number;
  data: string;
}): Float32Array {
  const bytes = base64ToBytes(grid.data);
  if (bytes.length !== grid.width * grid.height) {
    throw new Error(`grid data length ${bytes.length} != ${grid.width}x${grid.height}`);
  }
  const out = new Float32Array(bytes.length);
  const span = grid.hi - grid.lo;
  for (let i = 0; i < bytes.length; i++) {
    out[i] = grid.lo + (bytes[i]! / 255) * span;
  }
  return out;
}

export function base64ToBytes(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(b64);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
    return out;
  }
  return Uint8Array.from(Buffer.from(b64, "base64"));
}
