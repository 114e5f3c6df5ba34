import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { exportJson, exportSample, predictionToAnnotation } from "../src/export.js";
import { SessionState } from "../src/session.js";
import { predictResponseSchema, sampleSchema, type PointPrediction } from "../src/types.js";

const canned = JSON.parse(readFileSync(new URL("../fixtures/canned.json", import.meta.url), "utf8"));
const points = predictResponseSchema.parse(canned.predict).points;
// a movable prediction carrying a rotation axis, composed from canned parts
const withAxis: PointPrediction = {
  ...points.find((p) => p.axis !== null)!,
  movable: { label: "one_hand", probs: { fixture: 0.05, one_hand: 0.9, two_hands: 0.05 } },
  articulation: { label: "rotation", probs: { rotation: 0.9, translation: 0.05, freeform: 0.05 } },
  rigidity: { label: "rigid", probs: { rigid: 0.9, nonrigid: 0.1 } },
};

function sessionWithOneAnswer(): SessionState {
  const s = new SessionState();
  s.loadImage("img_export", canned.image, canned.image_width, canned.image_height);
  const { index, token } = s.addQuery(0.4, 0.6);
  s.applyPrediction(index, token, withAxis);
  return s;
}

describe("export", () => {
  it("one accepted prediction exports a schema-valid single-query sample", () => {
    const doc = exportSample(sessionWithOneAnswer());
    expect(doc.queries).toHaveLength(1);
    expect(() => sampleSchema.parse(doc)).not.toThrow();
    const q = doc.queries[0]!;
    expect(q.movable).toBe(withAxis.movable.label);
    // rotation prediction carries its axis; others must not
    expect(q.axis !== null).toBe(q.articulation === "rotation");
  });

  it("an edited movable label survives the round-trip", () => {
    const s = sessionWithOneAnswer();
    s.editLabel(0, "movable", "two_hands");
    const doc = JSON.parse(exportJson(s));
    expect(sampleSchema.parse(doc).queries[0]!.movable).toBe("two_hands");
  });

  it("editing to fixture nulls every other field", () => {
    const s = sessionWithOneAnswer();
    s.editLabel(0, "movable", "fixture");
    const q = exportSample(s).queries[0]!;
    expect(q.rigidity).toBeNull();
    expect(q.box).toBeNull();
    expect(q.mask).toBeNull();
    expect(q.axis).toBeNull();
    expect(q.affordance).toBeNull();
  });

  it("editing rigidity to nonrigid drops the articulation and axis", () => {
    const s = sessionWithOneAnswer();
    s.editLabel(0, "rigidity", "nonrigid");
    const q = exportSample(s).queries[0]!;
    expect(q.articulation).toBeNull();
    expect(q.axis).toBeNull();
  });

  it("an empty session refuses to export", () => {
    const s = new SessionState();
    expect(() => exportSample(s)).toThrow(/no image/);
    s.loadImage("img_empty", canned.image, 4, 4);
    s.addQuery(0.5, 0.5); // issued but never answered
    expect(() => exportSample(s)).toThrow(/nothing to export/);
  });

  it("rejects a label outside the taxonomy", () => {
    expect(() => predictionToAnnotation({ x: 0.5, y: 0.5 }, withAxis, { movable: "robot" })).toThrow(
      /not one of/,
    );
  });

  it("every canned prediction exports to a valid annotation", () => {
    for (const p of points) {
      const q = predictionToAnnotation({ x: 0.5, y: 0.5 }, p);
      const doc = { image_id: "x", source: "ui_annotation", queries: [q] };
      expect(() => sampleSchema.parse(doc)).not.toThrow();
    }
  });
});
