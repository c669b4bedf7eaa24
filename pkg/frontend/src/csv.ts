/** Gaze CSV export in the pipeline's ingestion format.
 *
 * Header `frame,x,y,observer`, one row per recorded frame, "\n" line
 * endings, trailing newline. Coordinates are rounded to 1/1000 px and
 * printed with JavaScript number formatting, which is deterministic, so
 * the same session always exports byte-identical files.
 */

import type { RecordedPoint } from "./session.js";

export function formatCoord(v: number): string {
  if (!Number.isFinite(v)) {
    throw new Error(`non-finite coordinate ${v}`);
  }
  return String(Math.round(v * 1000) / 1000);
}

export function exportCsv(points: readonly RecordedPoint[], observerId: string): string {
  if (points.length === 0) {
    throw new Error("nothing recorded; cannot export an empty session");
  }
  if (/[",\n\r]/.test(observerId)) {
    throw new Error("observer id must not contain commas, quotes or newlines");
  }
  const lines = ["frame,x,y,observer"];
  for (const p of points) {
    lines.push(`${p.frame},${formatCoord(p.x)},${formatCoord(p.y)},${observerId}`);
  }
  return lines.join("\n") + "\n";
}

export function downloadName(observerId: string): string {
  return `gaze_${observerId}.csv`;
}
