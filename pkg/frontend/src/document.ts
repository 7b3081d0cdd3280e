// Canvas document model for the two-stage design surface.
//
// Global mode holds class-tagged layout rectangles only; Local mode holds
// freehand strokes, shapes (rectangles, lines, arrows), and placed text.
// The two documents live side by side so switching modes never loses work.

export type Mode = "global" | "local";

export type LayoutClass = "title" | "text" | "figure";

export interface Point {
  x: number;
  y: number;
}

export interface Stroke {
  points: Point[];
  thickness: number;
  color: number; // grayscale ink value, 0 = black
}

export type ShapeKind = "rect" | "line" | "arrow";

export interface Shape {
  kind: ShapeKind;
  from: Point;
  to: Point;
  thickness: number;
  color: number;
}

export interface TextItem {
  text: string;
  position: Point;
  fontLabel: number; // classifier label index, -1 = unset
}

export interface LayoutRegion {
  cls: LayoutClass;
  // x0, y0, x1, y1 normalized to [0, 1]
  bbox: [number, number, number, number];
}

export interface CanvasDocument {
  mode: Mode;
  width: number;
  height: number;
  strokes: Stroke[];
  shapes: Shape[];
  texts: TextItem[];
  layoutRegions: LayoutRegion[];
}

export function emptyDocument(mode: Mode, width: number, height: number): CanvasDocument {
  return { mode, width, height, strokes: [], shapes: [], texts: [], layoutRegions: [] };
}

export function addStroke(doc: CanvasDocument, stroke: Stroke): void {
  if (doc.mode !== "local") throw new Error("strokes belong to local mode");
  if (stroke.points.length === 0) throw new Error("empty stroke");
  doc.strokes.push(stroke);
}

export function addShape(doc: CanvasDocument, shape: Shape): void {
  if (doc.mode !== "local") throw new Error("shapes belong to local mode");
  doc.shapes.push(shape);
}

export function addText(doc: CanvasDocument, item: TextItem): void {
  if (doc.mode !== "local") throw new Error("text belongs to local mode");
  doc.texts.push(item);
}

export function addLayoutRegion(doc: CanvasDocument, region: LayoutRegion): void {
  if (doc.mode !== "global") throw new Error("layout regions belong to global mode");
  const [x0, y0, x1, y1] = region.bbox;
  if (!(x0 >= 0 && x0 < x1 && x1 <= 1 && y0 >= 0 && y0 < y1 && y1 <= 1)) {
    throw new Error(`bad bbox [${region.bbox}]`);
  }
  doc.layoutRegions.push(region);
}

export function undoLast(doc: CanvasDocument): boolean {
  const stack =
    doc.mode === "global"
      ? doc.layoutRegions
      : doc.strokes.length
        ? doc.strokes
        : doc.shapes.length
          ? doc.shapes
          : doc.texts;
  if (stack.length === 0) return false;
  stack.pop();
  return true;
}

/** True when the local document carries no ink at all. */
export function isBlank(doc: CanvasDocument): boolean {
  return doc.strokes.length === 0 && doc.shapes.length === 0 && doc.texts.length === 0;
}
