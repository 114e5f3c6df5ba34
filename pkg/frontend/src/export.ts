/** Export the session as a dataset-format sample so the client doubles as a
 * lightweight annotation/correction tool.
 */

import {
  ACTION,
  ARTICULATION,
  MOVABLE,
  RIGIDITY,
  type PointPrediction,
  type QueryAnnotation,
  type Sample,
  sampleSchema,
} from "./types.js";
import type { SessionState } from "./session.js";

function argmaxLabel(head: { label: string; probs: Record<string, number> }): string {
  return head.label;
}

function pick<T extends readonly string[]>(value: string, allowed: T): T[number] {
  if (!allowed.includes(value)) {
    throw new Error(`label "${value}" not one of ${allowed.join(", ")}`);
  }
  return value;
}

/** One accepted (optionally edited) prediction -> a dataset query record. */
export function predictionToAnnotation(
  point: { x: number; y: number },
  p: PointPrediction,
  edits: Partial<Record<"movable" | "rigidity" | "articulation" | "action", string>> = {},
): QueryAnnotation {
  const movable = pick(edits.movable ?? argmaxLabel(p.movable), MOVABLE);
  if (movable === "fixture") {
    return {
      point,
      movable,
      rigidity: null,
      articulation: null,
      action: null,
      box: null,
      mask: null,
      axis: null,
      affordance: null,
    };
  }
  const rigidity = pick(edits.rigidity ?? argmaxLabel(p.rigidity), RIGIDITY);
  let articulation: QueryAnnotation["articulation"] = pick(
    edits.articulation ?? argmaxLabel(p.articulation),
    ARTICULATION,
  );
  if (rigidity === "nonrigid") articulation = null;
  return {
    point,
    movable,
    rigidity,
    articulation,
    action: pick(edits.action ?? argmaxLabel(p.action), ACTION),
    box: p.box,
    mask: p.mask,
    axis: articulation === "rotation" ? p.axis : null,
    affordance: { keypoint: p.affordance.point, radius_px: 5 },
  };
}

/** Build and validate the export document. Throws on an empty session. */
export function exportSample(session: SessionState): Sample {
  if (session.imageId === null) throw new Error("no image loaded");
  const answered = session.queries.filter((q) => q.prediction !== null);
  if (answered.length === 0) {
    throw new Error("nothing to export: no answered queries in this session");
  }
  const doc: Sample = {
    image_id: session.imageId,
    source: "ui_annotation",
    queries: answered.map((q) => predictionToAnnotation(q.point, q.prediction!, q.edits)),
  };
  return sampleSchema.parse(doc);
}

export function exportJson(session: SessionState): string {
  return JSON.stringify(exportSample(session), null, 1);
}
