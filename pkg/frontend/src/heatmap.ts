// Heat-map overlay: per-cell intensities from the service rendered as a
// darker-is-denser grayscale layer over the Global canvas.

import { Raster } from "./raster.js";
import type { HeatmapResponse } from "./client.js";

/**
 * Expand a cell grid to canvas resolution.
 *
 * Intensity 0 renders white; the densest cell renders `maxInk` gray.
 * An all-zero grid (empty corpus) therefore yields a uniform white layer.
 */
export function renderHeatmap(
  hm: HeatmapResponse,
  width: number,
  height: number,
  maxInk = 160,
): Raster {
  const out = new Raster(width, height);
  const peak = Math.max(...hm.intensities, 0);
  if (peak === 0) return out;
  for (let y = 0; y < height; y++) {
    const gy = Math.min(hm.grid_h - 1, Math.floor((y * hm.grid_h) / height));
    for (let x = 0; x < width; x++) {
      const gx = Math.min(hm.grid_w - 1, Math.floor((x * hm.grid_w) / width));
      const v = hm.intensities[gy * hm.grid_w + gx] / peak;
      out.data[y * width + x] = Math.round(255 - maxInk * v);
    }
  }
  return out;
}

/** Legend stops for the on-screen scale, darkest last. */
export function legendStops(steps = 5, maxInk = 160): number[] {
  const stops: number[] = [];
  for (let i = 0; i < steps; i++) {
    stops.push(Math.round(255 - (maxInk * i) / (steps - 1)));
  }
  return stops;
}
