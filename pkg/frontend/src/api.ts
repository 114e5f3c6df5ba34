/** HTTP client for the inference service, plus an offline mode that replays
 * canned responses so the client (and its tests) run without a trained model.
 */

import {
  predictResponseSchema,
  renderResponseSchema,
  type PredictResponse,
  type RenderResponse,
} from "./types.js";
import { MAX_POINTS_PER_REQUEST } from "./session.js";

export interface ApiConfig {
  baseUrl: string;
}

export class ServiceError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export interface CannedResponses {
  predict: unknown;
  render?: unknown;
}

export class ApiClient {
  private canned: CannedResponses | null = null;

  constructor(
    public readonly config: ApiConfig,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  /** Switch to offline mode: every call replays the canned documents. */
  useCanned(canned: CannedResponses): void {
    this.canned = canned;
  }

  get offline(): boolean {
    return this.canned !== null;
  }

  async health(): Promise<{ status: string }> {
    if (this.canned) return { status: "ok" };
    const res = await this.fetchFn(`${this.config.baseUrl}/health`);
    if (!res.ok) throw new ServiceError(res.status, await res.text());
    return (await res.json()) as { status: string };
  }

  async predict(
    imageB64: string,
    points: Array<{ x: number; y: number }>,
    includeDepth = false,
  ): Promise<PredictResponse> {
    if (points.length === 0) throw new Error("at least one query point required");
    if (points.length > MAX_POINTS_PER_REQUEST) {
      throw new Error(`at most ${MAX_POINTS_PER_REQUEST} points per request, got ${points.length}`);
    }
    if (this.canned) {
      const doc = predictResponseSchema.parse(this.canned.predict);
      // replay per-point: cycle the canned predictions to match the request
      return {
        points: points.map((_, i) => doc.points[i % doc.points.length]!),
        ...(includeDepth && doc.depth ? { depth: doc.depth } : {}),
      };
    }
    const res = await this.fetchFn(`${this.config.baseUrl}/predict`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ image: imageB64, points, include_depth: includeDepth }),
    });
    if (!res.ok) throw new ServiceError(res.status, await res.text());
    return predictResponseSchema.parse(await res.json());
  }

  async render(
    imageB64: string,
    point: { x: number; y: number },
    options: { angles?: number[]; offsets?: number[] } = {},
  ): Promise<RenderResponse> {
    if (this.canned) {
      if (!this.canned.render) throw new ServiceError(422, "no canned render clip");
      return renderResponseSchema.parse(this.canned.render);
    }
    const res = await this.fetchFn(`${this.config.baseUrl}/render`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ image: imageB64, point, ...options }),
    });
    if (!res.ok) throw new ServiceError(res.status, await res.text());
    return renderResponseSchema.parse(await res.json());
  }

  /** Absolute URL for a manifest frame path such as /frames/<key>/frame_000.png. */
  frameUrl(path: string): string {
    if (this.canned) {
      const name = path.split("/").pop();
      return `fixtures/frames/${name}`;
    }
    return `${this.config.baseUrl}${path}`;
  }
}
