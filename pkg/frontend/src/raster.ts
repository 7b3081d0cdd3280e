// Software rasterizer for the canvas document.
//
// The UI draws on an HTML canvas for display, but retrieval and export
// need pixel-exact, DOM-free rendering: the sketch posted to the service
// must equal what the tests (and the corpus builder) see. Everything here
// works on a plain grayscale byte buffer.

import { PNG } from "pngjs";

import type { CanvasDocument, Point, Shape, Stroke, TextItem } from "./document.js";

export class Raster {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8ClampedArray; // row-major grayscale, 255 = white

  constructor(width: number, height: number, fill = 255) {
    if (width <= 0 || height <= 0) throw new Error(`bad raster dims ${width}x${height}`);
    this.width = width;
    this.height = height;
    this.data = new Uint8ClampedArray(width * height).fill(fill);
  }

  at(x: number, y: number): number {
    return this.data[y * this.width + x];
  }

  // Square brush stamp centered on (cx, cy).
  stamp(cx: number, cy: number, thickness: number, color: number): void {
    const r = Math.max(0, Math.floor(thickness / 2));
    const x0 = Math.max(0, cx - r);
    const x1 = Math.min(this.width - 1, cx + r);
    const y0 = Math.max(0, cy - r);
    const y1 = Math.min(this.height - 1, cy + r);
    for (let y = y0; y <= y1; y++) {
      for (let x = x0; x <= x1; x++) {
        this.data[y * this.width + x] = color;
      }
    }
  }

  drawLine(a: Point, b: Point, thickness: number, color: number): void {
    // Bresenham over rounded endpoints, stamping the brush at each step.
    let x0 = Math.round(a.x);
    let y0 = Math.round(a.y);
    const x1 = Math.round(b.x);
    const y1 = Math.round(b.y);
    const dx = Math.abs(x1 - x0);
    const dy = -Math.abs(y1 - y0);
    const sx = x0 < x1 ? 1 : -1;
    const sy = y0 < y1 ? 1 : -1;
    let err = dx + dy;
    for (;;) {
      this.stamp(x0, y0, thickness, color);
      if (x0 === x1 && y0 === y1) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  drawPolyline(points: Point[], thickness: number, color: number): void {
    if (points.length === 1) {
      this.stamp(Math.round(points[0].x), Math.round(points[0].y), thickness, color);
      return;
    }
    for (let i = 1; i < points.length; i++) {
      this.drawLine(points[i - 1], points[i], thickness, color);
    }
  }

  drawRect(from: Point, to: Point, thickness: number, color: number): void {
    const tl = { x: Math.min(from.x, to.x), y: Math.min(from.y, to.y) };
    const br = { x: Math.max(from.x, to.x), y: Math.max(from.y, to.y) };
    const tr = { x: br.x, y: tl.y };
    const bl = { x: tl.x, y: br.y };
    this.drawLine(tl, tr, thickness, color);
    this.drawLine(tr, br, thickness, color);
    this.drawLine(br, bl, thickness, color);
    this.drawLine(bl, tl, thickness, color);
  }

  drawArrow(from: Point, to: Point, thickness: number, color: number): void {
    this.drawLine(from, to, thickness, color);
    const angle = Math.atan2(to.y - from.y, to.x - from.x);
    const headLen = 6 + 2 * thickness;
    for (const side of [Math.PI / 6, -Math.PI / 6]) {
      const tip = {
        x: to.x - headLen * Math.cos(angle + side),
        y: to.y - headLen * Math.sin(angle + side),
      };
      this.drawLine(to, tip, thickness, color);
    }
  }

  drawText(item: TextItem, color: number): void {
    // 5x7 bitmap capitals, scaled 2x; enough to place labels on a design.
    const scale = 2;
    let penX = Math.round(item.position.x);
    const penY = Math.round(item.position.y);
    for (const ch of item.text.toUpperCase()) {
      const rows = FONT_5X7[ch];
      if (rows) {
        for (let gy = 0; gy < 7; gy++) {
          for (let gx = 0; gx < 5; gx++) {
            if ((rows[gy] >> (4 - gx)) & 1) {
              for (let sy = 0; sy < scale; sy++) {
                for (let sx = 0; sx < scale; sx++) {
                  const px = penX + gx * scale + sx;
                  const py = penY + gy * scale + sy;
                  if (px >= 0 && px < this.width && py >= 0 && py < this.height) {
                    this.data[py * this.width + px] = color;
                  }
                }
              }
            }
          }
        }
      }
      penX += 6 * scale;
    }
  }

  clone(): Raster {
    const out = new Raster(this.width, this.height);
    out.data.set(this.data);
    return out;
  }
}

function drawShape(r: Raster, s: Shape): void {
  if (s.kind === "rect") r.drawRect(s.from, s.to, s.thickness, s.color);
  else if (s.kind === "arrow") r.drawArrow(s.from, s.to, s.thickness, s.color);
  else r.drawLine(s.from, s.to, s.thickness, s.color);
}

function drawStroke(r: Raster, s: Stroke): void {
  r.drawPolyline(s.points, s.thickness, s.color);
}

/** Render the user layer of a document (no overlays) to grayscale. */
export function rasterizeDocument(doc: CanvasDocument): Raster {
  const r = new Raster(doc.width, doc.height);
  for (const shape of doc.shapes) drawShape(r, shape);
  for (const stroke of doc.strokes) drawStroke(r, stroke);
  for (const text of doc.texts) r.drawText(text, 0);
  return r;
}

/** Grayscale raster as PNG bytes (deterministic for identical pixels). */
export function encodePng(r: Raster): Uint8Array {
  const png = new PNG({ width: r.width, height: r.height });
  for (let i = 0; i < r.data.length; i++) {
    const v = r.data[i];
    png.data[i * 4] = v;
    png.data[i * 4 + 1] = v;
    png.data[i * 4 + 2] = v;
    png.data[i * 4 + 3] = 255;
  }
  return new Uint8Array(PNG.sync.write(png, { deflateLevel: 9 }));
}

/** PNG bytes back to grayscale via the standard luma weights. */
export function decodePng(bytes: Uint8Array): Raster {
  const png = PNG.sync.read(Buffer.from(bytes));
  const r = new Raster(png.width, png.height);
  for (let i = 0; i < r.data.length; i++) {
    const red = png.data[i * 4];
    const green = png.data[i * 4 + 1];
    const blue = png.data[i * 4 + 2];
    r.data[i] = Math.round(0.299 * red + 0.587 * green + 0.114 * blue);
  }
  return r;
}

/** Export the user layer as a PNG download payload. */
export function saveCanvas(doc: CanvasDocument): Uint8Array {
  return encodePng(rasterizeDocument(doc));
}

export function toBase64(bytes: Uint8Array): string {
  return Buffer.from(bytes).toString("base64");
}

// Row bitmaps, 5 bits wide, top to bottom.
const FONT_5X7: Record<string, number[]> = {
  A: [0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11],
  B: [0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e],
  C: [0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e],
  D: [0x1e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1e],
  E: [0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f],
  F: [0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10],
  G: [0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0e],
  H: [0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11],
  I: [0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e],
  J: [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c],
  K: [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11],
  L: [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f],
  M: [0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11],
  N: [0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11],
  O: [0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e],
  P: [0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10],
  Q: [0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d],
  R: [0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11],
  S: [0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e],
  T: [0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04],
  U: [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e],
  V: [0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04],
  W: [0x11, 0x11, 0x11, 0x15, 0x15, 0x1b, 0x11],
  X: [0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11],
  Y: [0x11, 0x11, 0x0a, 0x04, 0x04, 0x04, 0x04],
  Z: [0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f],
  " ": [0, 0, 0, 0, 0, 0, 0],
};
