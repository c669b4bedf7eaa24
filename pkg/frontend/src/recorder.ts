/** Single-pass playback recorder.
 *
 * Frame i is displayed during [i/fps, (i+1)/fps) after start; the cursor is
 * sampled exactly once per frame, at its flip. There is deliberately no
 * pause or seek: a recording is one uninterrupted pass. If the render loop
 * stalls across several flips, each skipped frame still records the cursor
 * position at the moment it (momentarily) became current, keeping the
 * one-point-per-frame invariant.
 */

import type { RecordedPoint } from "./session.js";

export type RecorderState = "idle" | "recording" | "done";

export interface Cursor {
  x: number;
  y: number;
}

export class Recorder {
  readonly frameCount: number;
  readonly fps: number;
  private startMs = NaN;
  private current = -1;
  private readonly recorded: RecordedPoint[] = [];
  private state_: RecorderState = "idle";

  constructor(frameCount: number, fps: number) {
    if (!Number.isInteger(frameCount) || frameCount < 1) {
      throw new Error(`frameCount must be a positive integer, got ${frameCount}`);
    }
    if (!(fps > 0) || !Number.isFinite(fps)) {
      throw new Error(`fps must be positive, got ${fps}`);
    }
    this.frameCount = frameCount;
    this.fps = fps;
  }

  get state(): RecorderState {
    return this.state_;
  }

  get points(): readonly RecordedPoint[] {
    return this.recorded;
  }

  /** Current frame index, or -1 before start. */
  get currentFrame(): number {
    return this.current;
  }

  /** Begin playback; flips to frame 0 immediately and samples the cursor. */
  start(nowMs: number, cursor: Cursor): void {
    if (this.state_ !== "idle") {
      throw new Error("recorder already started");
    }
    this.startMs = nowMs;
    this.state_ = "recording";
    this.flipTo(0, cursor);
  }

  /**
   * Advance playback to wall-clock time nowMs, sampling the cursor at every
   * frame flip crossed. Returns the frame index to display, or null when
   * the pass is over.
   */
  tick(nowMs: number, cursor: Cursor): number | null {
    if (this.state_ === "idle") {
      throw new Error("recorder not started");
    }
    if (this.state_ === "done") {
      return null;
    }
    const elapsed = nowMs - this.startMs;
    const target = Math.floor((elapsed * this.fps) / 1000);
    for (let f = this.current + 1; f <= Math.min(target, this.frameCount - 1); f++) {
      this.flipTo(f, cursor);
    }
    if (target >= this.frameCount) {
      this.state_ = "done";
      return null;
    }
    return this.current;
  }

  private flipTo(frame: number, cursor: Cursor): void {
    this.current = frame;
    this.recorded.push({ frame, x: cursor.x, y: cursor.y });
  }
}
