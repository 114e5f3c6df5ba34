/** Regenerate the golden overlay PNG used by the overlay rendering test.
 *
 * Run `npm run golden` after an intentional change to the overlay drawing
 * code, then review the image by eye before committing it.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { PNG } from "pngjs";
import { renderOverlay } from "../src/overlay.js";
import { predictResponseSchema } from "../src/types.js";

const canned = JSON.parse(readFileSync(new URL("../fixtures/canned.json", import.meta.url), "utf8"));
const points = predictResponseSchema.parse(canned.predict).points;
const base = points.find((p) => p.axis !== null);
if (!base) throw new Error("canned fixture has no rotation prediction");
// same movable-with-axis composition as the overlay test
const withAxis = {
  ...base,
  movable: { label: "one_hand", probs: { fixture: 0.05, one_hand: 0.9, two_hands: 0.05 } },
  articulation: { label: "rotation", probs: { rotation: 0.9, translation: 0.05, freeform: 0.05 } },
  rigidity: { label: "rigid", probs: { rigid: 0.9, nonrigid: 0.1 } },
};

const layer = renderOverlay(withAxis, 256, 192);
const png = new PNG({ width: layer.width, height: layer.height });
png.data = Buffer.from(layer.data);
const out = new URL("../fixtures/golden_overlay.png", import.meta.url);
writeFileSync(out, PNG.sync.write(png));
console.log(`wrote ${out.pathname}`);
