import { describe, expect, it } from "vitest";

import { Recorder } from "../src/recorder.js";

const at = (x: number, y: number) => ({ x, y });

describe("Recorder", () => {
  it("records one point per frame for a clean 30-frame pass at 10 fps", () => {
    const rec = new Recorder(30, 10);
    rec.start(0, at(1, 1));
    for (let f = 1; f < 30; f++) {
      expect(rec.tick(f * 100, at(f, f))).toBe(f);
    }
    expect(rec.tick(3000, at(99, 99))).toBeNull();
    expect(rec.state).toBe("done");
    expect(rec.points.length).toBe(30);
    expect(rec.points.map((p) => p.frame)).toEqual(
      Array.from({ length: 30 }, (_, i) => i),
    );
  });

  it("samples the cursor at the flip, not between flips", () => {
    const rec = new Recorder(3, 10);
    rec.start(0, at(10, 10));
    rec.tick(50, at(20, 20)); // mid-frame movement is not recorded
    rec.tick(100, at(30, 30)); // flip to frame 1
    rec.tick(200, at(40, 40)); // flip to frame 2
    rec.tick(300, at(50, 50));
    expect(rec.points).toEqual([
      { frame: 0, x: 10, y: 10 },
      { frame: 1, x: 30, y: 30 },
      { frame: 2, x: 40, y: 40 },
    ]);
  });

  it("keeps one point per frame even when ticks stall across flips", () => {
    const rec = new Recorder(10, 10);
    rec.start(0, at(0, 0));
    rec.tick(450, at(5, 5)); // jumped over frames 1..4
    rec.tick(460, at(6, 6));
    rec.tick(1000, at(9, 9));
    expect(rec.state).toBe("done");
    expect(rec.points.length).toBe(10);
    const frames = rec.points.map((p) => p.frame);
    expect(new Set(frames).size).toBe(10);
  });

  it("records out-of-bounds cursor positions as-is", () => {
    const rec = new Recorder(2, 10);
    rec.start(0, at(-5, 900));
    rec.tick(100, at(1, 1));
    expect(rec.points[0]).toEqual({ frame: 0, x: -5, y: 900 });
  });

  it("finishes exactly after frameCount/fps seconds", () => {
    const rec = new Recorder(5, 25);
    rec.start(0, at(0, 0));
    expect(rec.tick(199, at(0, 0))).toBe(4);
    expect(rec.tick(200, at(0, 0))).toBeNull();
  });

  it("cannot be started twice (single pass)", () => {
    const rec = new Recorder(2, 10);
    rec.start(0, at(0, 0));
    expect(() => rec.start(0, at(0, 0))).toThrow(/already started/);
  });

  it("rejects bad construction arguments", () => {
    expect(() => new Recorder(0, 10)).toThrow(/frameCount/);
    expect(() => new Recorder(5, 0)).toThrow(/fps/);
  });
});
