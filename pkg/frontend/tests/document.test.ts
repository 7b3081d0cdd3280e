import { describe, expect, it } from "vitest";

import {
  addLayoutRegion,
  addShape,
  addStroke,
  addText,
  emptyDocument,
  isBlank,
  undoLast,
} from "../src/document.js";

describe("canvas document", () => {
  it("keeps global and local content apart", () => {
    const local = emptyDocument("local", 640, 360);
    addStroke(local, { points: [{ x: 1, y: 1 }], thickness: 2, color: 0 });
    expect(() => addLayoutRegion(local, { cls: "title", bbox: [0, 0, 1, 0.2] })).toThrow();

    const global = emptyDocument("global", 640, 360);
    addLayoutRegion(global, { cls: "title", bbox: [0, 0, 1, 0.2] });
    expect(() =>
      addStroke(global, { points: [{ x: 1, y: 1 }], thickness: 2, color: 0 }),
    ).toThrow();
    expect(() =>
      addShape(global, {
        kind: "rect",
        from: { x: 0, y: 0 },
        to: { x: 5, y: 5 },
        thickness: 1,
        color: 0,
      }),
    ).toThrow();
    expect(() =>
      addText(global, { text: "HI", position: { x: 0, y: 0 }, fontLabel: -1 }),
    ).toThrow();
  });

  it("rejects degenerate region boxes", () => {
    const global = emptyDocument("global", 640, 360);
    expect(() => addLayoutRegion(global, { cls: "text", bbox: [0.5, 0.1, 0.5, 0.4] })).toThrow();
    expect(() => addLayoutRegion(global, { cls: "text", bbox: [-0.1, 0, 0.5, 0.4] })).toThrow();
    expect(() => addLayoutRegion(global, { cls: "text", bbox: [0, 0, 0.5, 1.4] })).toThrow();
  });

  it("rejects empty strokes", () => {
    const local = emptyDocument("local", 100, 100);
    expect(() => addStroke(local, { points: [], thickness: 2, color: 0 })).toThrow();
  });

  it("undo pops the most recent item and reports emptiness", () => {
    const local = emptyDocument("local", 100, 100);
    expect(isBlank(local)).toBe(true);
    expect(undoLast(local)).toBe(false);
    addStroke(local, { points: [{ x: 1, y: 1 }], thickness: 2, color: 0 });
    expect(isBlank(local)).toBe(false);
    expect(undoLast(local)).toBe(true);
    expect(isBlank(local)).toBe(true);
  });
});
