/** DOM wiring for the capture tool.
 *
 * Record tab: load a session manifest, play its frames once at the session
 * fps while tracking the cursor over the stage, then download the gaze CSV.
 * Review tab: step through frames with an adjustable-opacity overlay of the
 * pipeline's probability maps.
 */

import { displayToImage } from "./coords.js";
import { downloadName, exportCsv } from "./csv.js";
import { clampOpacity, overlayStatus } from "./overlay.js";
import { Recorder } from "./recorder.js";
import { parseSessionManifest, type SessionManifest } from "./session.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

function context2d(canvas: HTMLCanvasElement): CanvasRenderingContext2D {
  const g = canvas.getContext("2d");
  if (!g) {
    throw new Error("2d canvas unavailable");
  }
  return g;
}

const stage = byId<HTMLCanvasElement>("stage");
const ctx = context2d(stage);
const statusLine = byId<HTMLElement>("status");
const banner = byId<HTMLElement>("banner");
const manifestInput = byId<HTMLInputElement>("manifest-file");
const startButton = byId<HTMLButtonElement>("start");
const exportButton = byId<HTMLButtonElement>("export");
const reviewSlider = byId<HTMLInputElement>("review-frame");
const opacitySlider = byId<HTMLInputElement>("overlay-opacity");
const overlayInput = byId<HTMLInputElement>("overlay-files");

let session: SessionManifest | null = null;
let frames: HTMLImageElement[] = [];
let overlays: HTMLImageElement[] = [];
let recorder: Recorder | null = null;
let cursor = { x: NaN, y: NaN };

function setBanner(message: string | null): void {
  banner.textContent = message ?? "";
  banner.style.display = message ? "block" : "none";
}

function setStatus(message: string): void {
  statusLine.textContent = message;
}

async function loadImage(url: string): Promise<HTMLImageElement> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.onload = () => resolve(img);
    img.onerror = () => reject(new Error(`cannot decode frame ${url}`));
    img.src = url;
  });
}

manifestInput.addEventListener("change", async () => {
  const file = manifestInput.files?.[0];
  if (!file) {
    return;
  }
  try {
    session = parseSessionManifest(await file.text());
    const base = new URL(".", URL.createObjectURL(file));
    void base; // frame URLs in the manifest are absolute or site-relative
    setStatus(`preloading ${session.frames.length} frames...`);
    frames = await Promise.all(session.frames.map(loadImage));
    const first = frames[0]!;
    stage.width = first.naturalWidth;
    stage.height = first.naturalHeight;
    ctx.drawImage(first, 0, 0);
    reviewSlider.max = String(frames.length - 1);
    startButton.disabled = false;
    setStatus(
      `ready: ${frames.length} frames at ${session.fps} fps, ` +
        `observer ${session.observer_id}`,
    );
  } catch (e) {
    session = null;
    frames = [];
    startButton.disabled = true;
    setBanner((e as Error).message);
  }
});

stage.addEventListener("mousemove", (ev) => {
  const rect = stage.getBoundingClientRect();
  cursor = displayToImage(ev.clientX, ev.clientY, rect, stage.width, stage.height);
});

startButton.addEventListener("click", () => {
  if (!session || frames.length === 0) {
    return;
  }
  setBanner(null);
  exportButton.disabled = true;
  recorder = new Recorder(frames.length, session.fps);
  recorder.start(performance.now(), cursor);
  ctx.drawImage(frames[0]!, 0, 0);
  setStatus("recording (single pass, no pause)...");
  requestAnimationFrame(step);
});

function step(now: number): void {
  if (!recorder) {
    return;
  }
  const frame = recorder.tick(now, cursor);
  if (frame === null) {
    setStatus(`recorded ${recorder.points.length} points; ready to export`);
    exportButton.disabled = false;
    return;
  }
  ctx.drawImage(frames[frame]!, 0, 0);
  requestAnimationFrame(step);
}

exportButton.addEventListener("click", () => {
  if (!recorder || !session || recorder.state !== "done") {
    return;
  }
  const csv = exportCsv(recorder.points, session.observer_id);
  const blob = new Blob([csv], { type: "text/csv" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = downloadName(session.observer_id);
  a.click();
  URL.revokeObjectURL(a.href);
});

// ---------------------------------------------------------------------------
// Review overlay
// ---------------------------------------------------------------------------

overlayInput.addEventListener("change", async () => {
  const files = Array.from(overlayInput.files ?? []);
  files.sort((a, b) => a.name.localeCompare(b.name));
  overlays = await Promise.all(
    files.map((f) => loadImage(URL.createObjectURL(f))),
  );
  drawReview();
});

reviewSlider.addEventListener("input", drawReview);
opacitySlider.addEventListener("input", drawReview);

function drawReview(): void {
  if (frames.length === 0) {
    return;
  }
  const idx = Math.min(Number(reviewSlider.value) || 0, frames.length - 1);
  const frame = frames[idx]!;
  ctx.globalAlpha = 1;
  ctx.drawImage(frame, 0, 0);
  const overlay = overlays[idx];
  if (!overlay) {
    return;
  }
  const status = overlayStatus(
    frame.naturalWidth,
    frame.naturalHeight,
    overlay.naturalWidth,
    overlay.naturalHeight,
  );
  if (!status.ok) {
    setBanner(status.message);
    return;
  }
  setBanner(null);
  ctx.globalAlpha = clampOpacity(Number(opacitySlider.value) / 100);
  ctx.drawImage(overlay, 0, 0);
  ctx.globalAlpha = 1;
}
