/** Column-major run-length masks, matching the dataset exchange format:
 * counts alternate runs of 0s and 1s, starting with 0s, scanning down
 * column 0 first, then column 1, and so on.
 */

import type { RleMask } from "./types.js";

/** Decode to a row-major Uint8Array of width*height zeros and ones. */
export function rleDecode(mask: RleMask): Uint8Array {
  const { width, height, counts } = mask;
  const total = width * height;
  const out = new Uint8Array(total);
  let pos = 0;
  let value = 0;
  for (const run of counts) {
    if (run < 0 || pos + run > total) {
      throw new Error(`rle counts overflow ${width}x${height} mask`);
    }
    if (value === 1) {
      for (let k = pos; k < pos + run; k++) {
        const col = Math.floor(k / height);
        const row = k % height;
        out[row * width + col] = 1;
      }
    }
    pos += run;
    value = 1 - value;
  }
  if (pos !== total) {
    throw new Error(`rle counts cover ${pos} pixels, expected ${total}`);
  }
  return out;
}

/** Encode a row-major 0/1 array; exact inverse of rleDecode. */
export function rleEncode(bits: Uint8Array | number[], width: number, height: number): RleMask {
  if (bits.length !== width * height) {
    throw new Error(`bit array length ${bits.length} != ${width}x${height}`);
  }
  const counts: number[] = [];
  let value = 0;
  let run = 0;
  for (let k = 0; k < width * height; k++) {
    const col = Math.floor(k / height);
    const row = k % height;
    const bit = bits[row * width + col] ? 1 : 0;
    if (bit === value) {
      run++;
    } else {
      counts.push(run);
      value = bit;
      run = 1;
    }
  }
  counts.push(run);
  return { width, height, counts };
}
