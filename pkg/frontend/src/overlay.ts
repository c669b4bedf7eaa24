/** Review-overlay checks: probability maps must match frame dimensions
 *  before they are composited; mismatches surface as a banner, not a
 *  silently stretched image. */

export type OverlayStatus = { ok: true } | { ok: false; message: string };

export function overlayStatus(
  frameWidth: number,
  frameHeight: number,
  overlayWidth: number,
  overlayHeight: number,
): OverlayStatus {
  if (frameWidth === overlayWidth && frameHeight === overlayHeight) {
    return { ok: true };
  }
  return {
    ok: false,
    message:
      `overlay is ${overlayWidth}x${overlayHeight} but the frame is ` +
      `${frameWidth}x${frameHeight}`,
  };
}

export function clampOpacity(value: number): number {
  if (Number.isNaN(value)) {
    return 0;
  }
  return Math.min(1, Math.max(0, value));
}
