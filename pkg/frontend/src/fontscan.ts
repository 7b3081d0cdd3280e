// Font scan: crop a selection from a displayed candidate slide, ask the
// service which of the five faces it is, and apply the label to the text
// tool. A blank selection comes back as a 422 empty-glyph error and turns
// into a hint instead of a label change.

import { ApiClient, ServiceError } from "./client.js";
import { Raster, encodePng, toBase64 } from "./raster.js";

export interface SelectionRect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface FontScanResult {
  applied: boolean;
  label: number | null;
  fontName: string | null;
  confidence: number | null;
  hint: string | null;
}

export const NO_TEXT_HINT = "no text detected";

export function cropSelection(slide: Raster, sel: SelectionRect): Raster {
  const x0 = Math.max(0, Math.floor(sel.x));
  const y0 = Math.max(0, Math.floor(sel.y));
  const x1 = Math.min(slide.width, Math.ceil(sel.x + sel.w));
  const y1 = Math.min(slide.height, Math.ceil(sel.y + sel.h));
  if (x1 <= x0 || y1 <= y0) throw new Error("selection outside slide");
  const out = new Raster(x1 - x0, y1 - y0);
  for (let y = y0; y < y1; y++) {
    for (let x = x0; x < x1; x++) {
      out.data[(y - y0) * out.width + (x - x0)] = slide.data[y * slide.width + x];
    }
  }
  return out;
}

/**
 * Classify the selection and report what the text tool should do.
 *
 * The tool's font label changes only on success; the empty-glyph path
 * returns a hint and leaves the tool untouched.
 */
export async function fontScan(
  client: ApiClient,
  slide: Raster,
  sel: SelectionRect,
): Promise<FontScanResult> {
  const crop = cropSelection(slide, sel);
  try {
    const res = await client.classifyFont(toBase64(encodePng(crop)));
    return {
      applied: true,
      label: res.label,
      fontName: res.font_name,
      confidence: res.confidence,
      hint: null,
    };
  } catch (err) {
    if (err instanceof ServiceError && err.status === 422) {
      return { applied: false, label: null, fontName: null, confidence: null, hint: NO_TEXT_HINT };
    }
    throw err;
  }
}
