/** Session manifest: which frames to play, how fast, and who is watching. */

export interface SessionManifest {
  /** Frame image URLs in playback order. */
  frames: string[];
  /** Playback rate in frames per second. */
  fps: number;
  observer_id: string;
}

export interface RecordedPoint {
  frame: number;
  /** Image-native pixel coordinates (may be out of bounds if the cursor
   *  left the viewport; the pipeline's parser drops those rows). */
  x: number;
  y: number;
}

export function parseSessionManifest(text: string): SessionManifest {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new Error(`session manifest is not valid JSON: ${(e as Error).message}`);
  }
  if (typeof raw !== "object" || raw === null) {
    throw new Error("session manifest must be a JSON object");
  }
  const obj = raw as Record<string, unknown>;
  const frames = obj["frames"];
  if (!Array.isArray(frames) || frames.length === 0) {
    throw new Error("session manifest needs a non-empty frames array");
  }
  if (!frames.every((f) => typeof f === "string")) {
    throw new Error("session manifest frames must be URL strings");
  }
  const fps = obj["fps"] ?? 10;
  if (typeof fps !== "number" || !(fps > 0) || !Number.isFinite(fps)) {
    throw new Error(`session fps must be a positive number, got ${String(fps)}`);
  }
  const observer = obj["observer_id"] ?? "observer";
  if (typeof observer !== "string" || observer.length === 0) {
    throw new Error("session observer_id must be a non-empty string");
  }
  return { frames: frames as string[], fps, observer_id: observer };
}
