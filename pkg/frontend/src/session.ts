/** Client session state: loaded image, issued queries and their answers,
 * the selected query, and the animation scrub position.
 *
 * Invariants enforced here:
 *  - the selected query always refers to an issued query;
 *  - at most 15 points are ever pending in one request;
 *  - a stale /predict response (superseded by a newer click) is discarded.
 */

import type { PointPrediction } from "./types.js";

export const MAX_POINTS_PER_REQUEST = 15;

export interface IssuedQuery {
  point: { x: number; y: number };
  /** Filled in when the service answers; null while in flight or failed. */
  prediction: PointPrediction | null;
  /** User-corrected labels override the prediction on export. */
  edits: Partial<{
    movable: string;
    rigidity: string;
    articulation: string;
    action: string;
  }>;
}

export class SessionState {
  imageId: string | null = null;
  imageData: string | null = null; // base64 PNG of the loaded photo
  imageW = 0;
  imageH = 0;
  queries: IssuedQuery[] = [];
  private selected: number | null = null;
  scrubPosition = 0;
  private requestToken = 0;

  loadImage(imageId: string, base64Png: string, width: number, height: number): void {
    this.imageId = imageId;
    this.imageData = base64Png;
    this.imageW = width;
    this.imageH = height;
    this.queries = [];
    this.selected = null;
    this.scrubPosition = 0;
  }

  get selectedIndex(): number | null {
    return this.selected;
  }

  get selectedQuery(): IssuedQuery | null {
    return this.selected === null ? null : (this.queries[this.selected] ?? null);
  }

  select(index: number): void {
    if (!Number.isInteger(index) || index < 0 || index >= this.queries.length) {
      throw new Error(`cannot select query ${index}: only ${this.queries.length} issued`);
    }
    this.selected = index;
  }

  /** Register a click; returns (query index, request token). */
  addQuery(x: number, y: number): { index: number; token: number } {
    if (this.imageId === null) throw new Error("no image loaded");
    if (x < 0 || x > 1 || y < 0 || y > 1) {
      throw new Error(`query point (${x}, ${y}) outside [0,1]^2`);
    }
    this.queries.push({ point: { x, y }, prediction: null, edits: {} });
    const index = this.queries.length - 1;
    this.selected = index;
    this.requestToken += 1;
    return { index, token: this.requestToken };
  }

  /** Points to send for one request (only the unanswered ones, capped). */
  pendingPoints(): Array<{ x: number; y: number }> {
    const pending = this.queries.filter((q) => q.prediction === null).map((q) => q.point);
    if (pending.length > MAX_POINTS_PER_REQUEST) {
      return pending.slice(pending.length - MAX_POINTS_PER_REQUEST);
    }
    return pending;
  }

  /** Apply a /predict answer. Returns false when the token is stale. */
  applyPrediction(index: number, token: number, prediction: PointPrediction): boolean {
    if (token !== this.requestToken) return false; // superseded by a newer click
    const q = this.queries[index];
    if (!q) throw new Error(`no issued query at index ${index}`);
    q.prediction = prediction;
    return true;
  }

  editLabel(index: number, field: keyof IssuedQuery["edits"], value: string): void {
    const q = this.queries[index];
    if (!q) throw new Error(`no issued query at index ${index}`);
    q.edits[field] = value;
  }

  answeredCount(): number {
    return this.queries.filter((q) => q.prediction !== null).length;
  }
}
