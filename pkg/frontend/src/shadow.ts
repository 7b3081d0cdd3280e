// Shadow-guidance compositing: the active candidate diagram drawn at 30%
// opacity beneath the user's ink. Operates on grayscale rasters so the
// exact blend is testable without a DOM canvas; the UI blits the result.

import { Raster, rasterizeDocument } from "./raster.js";
import type { CanvasDocument } from "./document.js";

export const SHADOW_OPACITY = 0.3;

/**
 * Composite user ink over an optional shadow image.
 *
 * The shadow is alpha-blended onto white first (ink darkens toward 30%
 * gray), then every user-inked pixel paints fully opaque on top.
 */
export function renderShadow(doc: CanvasDocument, shadow: Raster | null): Raster {
  const ink = rasterizeDocument(doc);
  if (shadow === null) return ink;
  const out = new Raster(doc.width, doc.height);
  const sw = shadow.width;
  const sh = shadow.height;
  for (let y = 0; y < out.height; y++) {
    for (let x = 0; x < out.width; x++) {
      const i = y * out.width + x;
      // Center the shadow if its dims differ from the canvas.
      const sx = x - ((out.width - sw) >> 1);
      const sy = y - ((out.height - sh) >> 1);
      let base = 255;
      if (sx >= 0 && sx < sw && sy >= 0 && sy < sh) {
        const s = shadow.data[sy * sw + sx];
        base = Math.round(255 * (1 - SHADOW_OPACITY) + s * SHADOW_OPACITY);
      }
      out.data[i] = ink.data[i] < 255 ? ink.data[i] : base;
    }
  }
  return out;
}
