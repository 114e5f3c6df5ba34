/** Animation scrubber: map a drag position in [0, 1] to a frame index. */

export function frameIndex(position: number, frameCount: number): number {
  if (!Number.isInteger(frameCount) || frameCount < 1) {
    throw new Error(`frameCount must be a positive integer, got ${frameCount}`);
  }
  const p = Math.min(1, Math.max(0, position));
  return Math.round(p * (frameCount - 1));
}

/** Stateful scrubber that never steps backwards while a forward drag is in
 * progress (jittery pointer events must not flash earlier frames).
 */
export class Scrubber {
  private frame = 0;
  private lastPosition = 0;

  constructor(public readonly frameCount: number) {
    if (!Number.isInteger(frameCount) || frameCount < 1) {
      throw new Error(`frameCount must be a positive integer, got ${frameCount}`);
    }
  }

  get current(): number {
    return this.frame;
  }

  /** Feed one drag event; returns the frame to display. */
  drag(position: number): number {
    const target = frameIndex(position, this.frameCount);
    if (position >= this.lastPosition) {
      // forward drag: never decrease
      this.frame = Math.max(this.frame, target);
    } else {
      this.frame = target;
    }
    this.lastPosition = Math.min(1, Math.max(0, position));
    return this.frame;
  }

  /** Explicit jump (e.g. clicking the track), allowed to go backwards. */
  seek(position: number): number {
    this.frame = frameIndex(position, this.frameCount);
    this.lastPosition = Math.min(1, Math.max(0, position));
    return this.frame;
  }
}
