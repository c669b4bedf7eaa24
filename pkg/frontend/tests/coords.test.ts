import { describe, expect, it } from "vitest";

import { displayToImage, isInsideImage } from "../src/coords.js";

describe("displayToImage", () => {
  it("is the identity when the stage is unscaled", () => {
    const rect = { left: 0, top: 0, width: 128, height: 128 };
    expect(displayToImage(40, 60, rect, 128, 128)).toEqual({ x: 40, y: 60 });
  });

  it("maps a 2x-scaled display back to image-native pixels", () => {
    // 128x128 image displayed at 256x256: clicking the displayed target
    // center must export image coordinates, not screen coordinates.
    const rect = { left: 0, top: 0, width: 256, height: 256 };
    expect(displayToImage(128, 64, rect, 128, 128)).toEqual({ x: 64, y: 32 });
  });

  it("subtracts the stage offset", () => {
    const rect = { left: 100, top: 50, width: 128, height: 128 };
    expect(displayToImage(110, 55, rect, 128, 128)).toEqual({ x: 10, y: 5 });
  });

  it("handles anisotropic scaling", () => {
    const rect = { left: 0, top: 0, width: 640, height: 240 };
    const p = displayToImage(320, 120, rect, 320, 240);
    expect(p).toEqual({ x: 160, y: 120 });
  });

  it("produces out-of-bounds coordinates for cursors off the stage", () => {
    const rect = { left: 100, top: 100, width: 128, height: 128 };
    const p = displayToImage(50, 50, rect, 128, 128);
    expect(p.x).toBeLessThan(0);
    expect(isInsideImage(p, 128, 128)).toBe(false);
  });

  it("rejects a degenerate rect", () => {
    expect(() =>
      displayToImage(0, 0, { left: 0, top: 0, width: 0, height: 10 }, 1, 1),
    ).toThrow(/zero size/);
  });
});

describe("isInsideImage", () => {
  it("uses half-open bounds like the pipeline parser", () => {
    expect(isInsideImage({ x: 0, y: 0 }, 128, 128)).toBe(true);
    expect(isInsideImage({ x: 127.9, y: 127.9 }, 128, 128)).toBe(true);
    expect(isInsideImage({ x: 128, y: 0 }, 128, 128)).toBe(false);
  });
});
