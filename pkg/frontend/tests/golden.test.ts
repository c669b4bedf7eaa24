/** Golden export: a deterministic session over the 30-frame synthetic
 * sequence must export byte-identically across UI versions. The fixture is
 * shared with the pipeline's acceptance suite, which ingests it with its
 * own parser (set GOLDEN_WRITE=1 to regenerate after an intentional format
 * change, then re-run the pipeline acceptance test).
 */

import { readFileSync, writeFileSync, existsSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { exportCsv } from "../src/csv.js";
import { Recorder } from "../src/recorder.js";
import type { RecordedPoint } from "../src/session.js";

const FIXTURE = join(
  dirname(fileURLToPath(import.meta.url)),
  "..",
  "fixtures",
  "golden_gaze.csv",
);

const FRAMES = 30;
const FPS = 10;
const OBSERVER = "ui-golden";

/** Cursor path inside the synthetic 128x128 blob sequence's bounds. */
function cursorAt(frame: number): { x: number; y: number } {
  return {
    x: 14 + frame * 3.4,
    y: 64 + 20 * Math.sin((2 * Math.PI * 1.5 * frame) / 29),
  };
}

function runGoldenSession(): readonly RecordedPoint[] {
  const rec = new Recorder(FRAMES, FPS);
  const t0 = 1000;
  rec.start(t0, cursorAt(0));
  for (let f = 1; f < FRAMES; f++) {
    rec.tick(t0 + (f * 1000) / FPS, cursorAt(f));
  }
  expect(rec.tick(t0 + (FRAMES * 1000) / FPS, cursorAt(FRAMES - 1))).toBeNull();
  return rec.points;
}

describe("golden session export", () => {
  it("records one in-bounds point per frame", () => {
    const points = runGoldenSession();
    expect(points.length).toBe(FRAMES);
    for (const p of points) {
      expect(p.x).toBeGreaterThanOrEqual(0);
      expect(p.x).toBeLessThan(128);
      expect(p.y).toBeGreaterThanOrEqual(0);
      expect(p.y).toBeLessThan(128);
    }
  });

  it("matches the checked-in fixture byte for byte", () => {
    const csv = exportCsv(runGoldenSession(), OBSERVER);
    if (process.env.GOLDEN_WRITE === "1" || !existsSync(FIXTURE)) {
      writeFileSync(FIXTURE, csv, "utf-8");
    }
    expect(csv).toBe(readFileSync(FIXTURE, "utf-8"));
  });
});
