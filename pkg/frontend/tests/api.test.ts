import { describe, expect, it, vi } from "vitest";
import { readFileSync } from "node:fs";
import { ApiClient, ServiceError } from "../src/api.js";
import { predictResponseSchema, renderResponseSchema } from "../src/types.js";

const canned = JSON.parse(readFileSync(new URL("../fixtures/canned.json", import.meta.url), "utf8"));

function offlineClient(): ApiClient {
  const client = new ApiClient({ baseUrl: "http://unused" });
  client.useCanned({ predict: canned.predict, render: canned.render });
  return client;
}

describe("ApiClient offline mode", () => {
  it("replays schema-valid canned predictions without any network", async () => {
    const client = offlineClient();
    const res = await client.predict(canned.image, [
      { x: 0.1, y: 0.1 },
      { x: 0.9, y: 0.9 },
    ]);
    expect(res.points).toHaveLength(2);
    expect(() => predictResponseSchema.parse(res)).not.toThrow();
  });

  it("canned render manifest is schema-valid with ordered parameters", async () => {
    const client = offlineClient();
    const res = await client.render(canned.image, { x: 0.5, y: 0.5 });
    expect(() => renderResponseSchema.parse(res)).not.toThrow();
    expect(res.frame_urls.length).toBe(res.parameters.length);
    for (let i = 1; i < res.parameters.length; i++) {
      expect(res.parameters[i]!).toBeGreaterThanOrEqual(res.parameters[i - 1]!);
    }
  });

  it("offline frame urls point at the bundled fixtures", async () => {
    const client = offlineClient();
    const res = await client.render(canned.image, { x: 0.5, y: 0.5 });
    expect(client.frameUrl(res.frame_urls[0]!)).toMatch(/^fixtures\/frames\//);
  });

  it("never sends more than 15 points in one request", async () => {
    const client = offlineClient();
    const many = Array.from({ length: 16 }, (_, i) => ({ x: (i + 0.5) / 16, y: 0.5 }));
    await expect(client.predict(canned.image, many)).rejects.toThrow(/at most 15/);
    await expect(client.predict(canned.image, [])).rejects.toThrow(/at least one/);
  });
});

describe("ApiClient online mode", () => {
  it("posts to <baseUrl>/predict and validates the response", async () => {
    const fetchFn = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
      expect(String(url)).toBe("http://svc:8000/predict");
      const body = JSON.parse(String(init?.body));
      expect(body.points).toHaveLength(1);
      return new Response(JSON.stringify(canned.predict), { status: 200 });
    });
    const client = new ApiClient({ baseUrl: "http://svc:8000" }, fetchFn as unknown as typeof fetch);
    const res = await client.predict(canned.image, [{ x: 0.5, y: 0.5 }]);
    expect(res.points.length).toBeGreaterThan(0);
    expect(fetchFn).toHaveBeenCalledOnce();
  });

  it("surfaces HTTP errors as ServiceError with the status code", async () => {
    const fetchFn = vi.fn(async () => new Response("bad image", { status: 400 }));
    const client = new ApiClient({ baseUrl: "http://svc:8000" }, fetchFn as unknown as typeof fetch);
    await expect(client.predict(canned.image, [{ x: 0.5, y: 0.5 }])).rejects.toMatchObject({
      status: 400,
    });
    await expect(client.health()).rejects.toBeInstanceOf(ServiceError);
  });

  it("rejects a response that fails schema validation", async () => {
    const fetchFn = vi.fn(async () => new Response(JSON.stringify({ points: [] }), { status: 200 }));
    const client = new ApiClient({ baseUrl: "http://svc:8000" }, fetchFn as unknown as typeof fetch);
    await expect(client.predict(canned.image, [{ x: 0.5, y: 0.5 }])).rejects.toThrow();
  });
});
