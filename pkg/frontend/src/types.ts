import { z } from "zod";

export const MOVABLE = ["fixture", "one_hand", "two_hands"] as const;
export const RIGIDITY = ["rigid", "nonrigid"] as const;
export const ARTICULATION = ["rotation", "translation", "freeform"] as const;
export const ACTION = ["pull", "push", "other"] as const;

export type Movable = (typeof MOVABLE)[number];
export type Rigidity = (typeof RIGIDITY)[number];
export type Articulation = (typeof ARTICULATION)[number];
export type Action = (typeof ACTION)[number];

const head = z.object({
  label: z.string(),
  probs: z.record(z.number().min(0).max(1)),
});

const quantizedGrid = z.object({
  width: z.number().int().positive(),
  height: z.number().int().positive(),
  encoding: z.literal("base64_u8"),
  lo: z.number(),
  hi: z.number(),
  data: z.string(),
});

export const axisSchema = z.object({
  theta: z.number().min(0).lt(Math.PI + 1e-8),
  r: z.number(),
});

export const boxSchema = z
  .object({
    x1: z.number().min(0).max(1),
    y1: z.number().min(0).max(1),
    x2: z.number().min(0).max(1),
    y2: z.number().min(0).max(1),
  })
  .refine((b) => b.x2 >= b.x1 && b.y2 >= b.y1, "box corners must be ordered");

export const rleMaskSchema = z.object({
  width: z.number().int().positive(),
  height: z.number().int().positive(),
  counts: z.array(z.number().int().min(0)),
});

export const pointPredictionSchema = z.object({
  movable: head,
  rigidity: head,
  articulation: head,
  action: head,
  box: boxSchema,
  axis: axisSchema.nullable(),
  mask: rleMaskSchema,
  affordance: z.object({
    heatmap: quantizedGrid.nullable(),
    point: z.object({ x: z.number().min(0).max(1), y: z.number().min(0).max(1) }),
  }),
});

export const predictResponseSchema = z.object({
  points: z.array(pointPredictionSchema).min(1).max(15),
  depth: quantizedGrid.optional(),
});

export type Axis = z.infer<typeof axisSchema>;
export type Box = z.infer<typeof boxSchema>;
export type RleMask = z.infer<typeof rleMaskSchema>;
export type QuantizedGrid = z.infer<typeof quantizedGrid>;
export type PointPrediction = z.infer<typeof pointPredictionSchema>;
export type PredictResponse = z.infer<typeof predictResponseSchema>;

/** One annotated query in the dataset exchange format. */
export const queryAnnotationSchema = z
  .object({
    point: z.object({ x: z.number().min(0).max(1), y: z.number().min(0).max(1) }),
    movable: z.enum(MOVABLE),
    rigidity: z.enum(RIGIDITY).nullable(),
    articulation: z.enum(ARTICULATION).nullable(),
    action: z.enum(ACTION).nullable(),
    box: boxSchema.nullable(),
    mask: rleMaskSchema.nullable(),
    axis: axisSchema.nullable(),
    affordance: z
      .object({
        keypoint: z.object({ x: z.number().min(0).max(1), y: z.number().min(0).max(1) }),
        radius_px: z.number().int().positive(),
      })
      .nullable(),
  })
  .superRefine((q, ctx) => {
    if (q.movable === "fixture") {
      for (const k of ["rigidity", "articulation", "action", "box", "mask", "axis", "affordance"] as const) {
        if (q[k] !== null) {
          ctx.addIssue({ code: z.ZodIssueCode.custom, message: `fixture query must have null ${k}` });
        }
      }
      return;
    }
    if ((q.axis !== null) !== (q.articulation === "rotation")) {
      ctx.addIssue({
        code: z.ZodIssueCode.custom,
        message: "axis must be present exactly when articulation is rotation",
      });
    }
    if (q.rigidity === "nonrigid" && q.articulation !== null) {
      ctx.addIssue({ code: z.ZodIssueCode.custom, message: "nonrigid objects carry no articulation" });
    }
  });

export const sampleSchema = z.object({
  image_id: z.string().min(1),
  source: z.string(),
  queries: z.array(queryAnnotationSchema).min(1).max(15),
});

export type QueryAnnotation = z.infer<typeof queryAnnotationSchema>;
export type Sample = z.infer<typeof sampleSchema>;

export const renderResponseSchema = z.object({
  key: z.string(),
  kind: z.enum(["rotation", "translation"]),
  parameters: z.array(z.number()),
  homographies: z.array(z.array(z.array(z.number()))),
  frame_urls: z.array(z.string()).min(1),
  prediction: pointPredictionSchema,
});
export type RenderResponse = z.infer<typeof renderResponseSchema>;
