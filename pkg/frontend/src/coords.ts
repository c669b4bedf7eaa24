/** Screen-to-image coordinate mapping.
 *
 * The stage element may be scaled by CSS or devicePixelRatio; exported
 * coordinates must always be image-native pixels.
 */

export interface DisplayRect {
  left: number;
  top: number;
  width: number;
  height: number;
}

export function displayToImage(
  clientX: number,
  clientY: number,
  rect: DisplayRect,
  imageWidth: number,
  imageHeight: number,
): { x: number; y: number } {
  if (rect.width <= 0 || rect.height <= 0) {
    throw new Error("display rect has zero size");
  }
  return {
    x: ((clientX - rect.left) * imageWidth) / rect.width,
    y: ((clientY - rect.top) * imageHeight) / rect.height,
  };
}

export function isInsideImage(
  p: { x: number; y: number },
  imageWidth: number,
  imageHeight: number,
): boolean {
  return p.x >= 0 && p.x < imageWidth && p.y >= 0 && p.y < imageHeight;
}
