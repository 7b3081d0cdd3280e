// Browser entry: wires the document model, debounced retrieval loop, and
// overlays to a pair of canvases plus a toolkit strip. All logic lives in
// the DOM-free modules; this file only handles events and blitting.

import { ApiClient } from "./client.js";
import {
  CanvasDocument,
  LayoutClass,
  Mode,
  addLayoutRegion,
  addShape,
  addStroke,
  addText,
  emptyDocument,
  undoLast,
} from "./document.js";
import { renderHeatmap } from "./heatmap.js";
import { Raster, decodePng, saveCanvas } from "./raster.js";
import { DebouncedRetriever } from "./retriever.js";
import { renderShadow } from "./shadow.js";
import { fontScan } from "./fontscan.js";

const WIDTH = 640;
const HEIGHT = 360;

type Tool = "pen" | "rect" | "line" | "arrow" | "text" | "region" | "fontscan";

interface AppState {
  mode: Mode;
  tool: Tool;
  regionClass: LayoutClass;
  fontLabel: number;
  docs: { global: CanvasDocument; local: CanvasDocument };
  shadowImage: Raster | null;
  shownSlide: Raster | null;
  auxLines: boolean;
}

function blit(ctx: CanvasRenderingContext2D, r: Raster): void {
  const img = ctx.createImageData(r.width, r.height);
  for (let i = 0; i < r.data.length; i++) {
    img.data[i * 4] = r.data[i];
    img.data[i * 4 + 1] = r.data[i];
    img.data[i * 4 + 2] = r.data[i];
    img.data[i * 4 + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
}

function drawAuxLines(ctx: CanvasRenderingContext2D): void {
  // Rule-of-thirds guides, toggleable from the toolkit.
  ctx.save();
  ctx.strokeStyle = "rgba(80, 140, 255, 0.5)";
  ctx.setLineDash([6, 6]);
  for (const f of [1 / 3, 2 / 3]) {
    ctx.beginPath();
    ctx.moveTo(WIDTH * f, 0);
    ctx.lineTo(WIDTH * f, HEIGHT);
    ctx.moveTo(0, HEIGHT * f);
    ctx.lineTo(WIDTH, HEIGHT * f);
    ctx.stroke();
  }
  ctx.restore();
}

export function startApp(root: HTMLElement, baseUrl: string): void {
  const client = new ApiClient(baseUrl);
  const state: AppState = {
    mode: "local",
    tool: "pen",
    regionClass: "title",
    fontLabel: -1,
    docs: {
      global: emptyDocument("global", WIDTH, HEIGHT),
      local: emptyDocument("local", WIDTH, HEIGHT),
    },
    shadowImage: null,
    shownSlide: null,
    auxLines: false,
  };

  root.innerHTML = `
    <div class="toolbar">
      <button id="mode-switch">Switch to Global</button>
      <span id="local-tools">
        <button data-tool="pen">Pen</button>
        <button data-tool="line">Line</button>
        <button data-tool="arrow">Arrow</button>
        <button data-tool="rect">Rectangle</button>
        <button data-tool="text">Text</button>
        <button data-tool="fontscan">Font scan</button>
      </span>
      <span id="global-tools" hidden>
        <select id="region-class">
          <option value="title">Title</option>
          <option value="text">Text</option>
          <option value="figure">Figure</option>
        </select>
        <select id="heat-class">
          <option value="all">All</option>
          <option value="title">Title</option>
          <option value="text">Text</option>
          <option value="figure">Figure</option>
        </select>
      </span>
      <button id="aux-lines">Guides</button>
      <button id="undo">Undo</button>
      <button id="save">Save canvas</button>
      <span id="font-indicator"></span>
    </div>
    <div class="stage">
      <canvas id="board" width="${WIDTH}" height="${HEIGHT}"></canvas>
      <div id="banner" class="banner" hidden></div>
    </div>
    <div id="results" class="results"></div>
  `;

  const board = root.querySelector<HTMLCanvasElement>("#board")!;
  const ctx = board.getContext("2d")!;
  const banner = root.querySelector<HTMLElement>("#banner")!;
  const results = root.querySelector<HTMLElement>("#results")!;
  const fontIndicator = root.querySelector<HTMLElement>("#font-indicator")!;

  const doc = () => state.docs[state.mode];

  const repaint = () => {
    if (state.mode === "local") {
      blit(ctx, renderShadow(doc(), state.shadowImage));
    } else {
      const hm = retriever.globalResults.heatmap;
      blit(ctx, hm ? renderHeatmap(hm, WIDTH, HEIGHT) : new Raster(WIDTH, HEIGHT));
      ctx.save();
      ctx.strokeStyle = "#333";
      for (const r of doc().layoutRegions) {
        const [x0, y0, x1, y1] = r.bbox;
        ctx.strokeRect(x0 * WIDTH, y0 * HEIGHT, (x1 - x0) * WIDTH, (y1 - y0) * HEIGHT);
        ctx.fillText(r.cls, x0 * WIDTH + 3, y0 * HEIGHT + 12);
      }
      ctx.restore();
    }
    if (state.auxLines) drawAuxLines(ctx);
  };

  const showBanner = (msg: string) => {
    banner.textContent = msg;
    banner.hidden = false;
    setTimeout(() => (banner.hidden = true), 4000);
  };

  const retriever = new DebouncedRetriever(client, {
    onError: showBanner,
    onGlobalResults: () => {
      renderResultStrip();
      repaint();
    },
    onGuidance: async (g) => {
      renderResultStrip();
      if (g.activeShadow !== null) {
        try {
          const bytes = await client.fetchImage(`/diagram/${g.activeShadow}.png`);
          state.shadowImage = decodePng(bytes);
        } catch {
          state.shadowImage = null;
        }
      } else {
        state.shadowImage = null;
      }
      repaint();
    },
  });

  function renderResultStrip(): void {
    results.innerHTML = "";
    if (state.mode === "local") {
      for (const entry of retriever.guidance.candidates) {
        const cell = document.createElement("div");
        cell.className = "candidate";
        const img = document.createElement("img");
        img.src = baseUrl + entry.url;
        img.title = `S=${entry.score.toFixed(3)}`;
        img.addEventListener("click", () => retriever.selectShadow(entry.diagram_id));
        img.addEventListener("dblclick", async () => {
          // Show the parent slide so text can be font-scanned.
          const slideId = entry.diagram_id.replace(/-\d+$/, "");
          try {
            state.shownSlide = decodePng(await client.fetchImage(`/slide/${slideId}.png`));
            showBanner(`slide ${slideId} loaded for font scan`);
          } catch (err) {
            showBanner(String(err));
          }
        });
        const pin = document.createElement("input");
        pin.type = "checkbox";
        pin.checked = retriever.guidance.pinned === entry.diagram_id;
        pin.addEventListener("change", () => retriever.togglePin(entry.diagram_id));
        cell.append(img, pin);
        results.appendChild(cell);
      }
    } else {
      for (const entry of retriever.globalResults.layouts) {
        const img = document.createElement("img");
        img.src = baseUrl + entry.url;
        img.title = `${entry.slide_id}: ${entry.score.toFixed(3)}`;
        results.appendChild(img);
      }
    }
  }

  // Pointer handling: pen accumulates points; shape/region tools drag a
  // start corner to an end corner.
  let dragStart: { x: number; y: number } | null = null;
  let penPoints: { x: number; y: number }[] = [];

  const canvasPos = (e: MouseEvent) => {
    const rect = board.getBoundingClientRect();
    return { x: e.clientX - rect.left, y: e.clientY - rect.top };
  };

  board.addEventListener("mousedown", (e) => {
    dragStart = canvasPos(e);
    if (state.tool === "pen") penPoints = [dragStart];
  });

  board.addEventListener("mousemove", (e) => {
    if (dragStart === null) return;
    if (state.tool === "pen") {
      penPoints.push(canvasPos(e));
      blit(ctx, renderShadow(doc(), state.shadowImage));
    }
  });

  board.addEventListener("mouseup", async (e) => {
    if (dragStart === null) return;
    const end = canvasPos(e);
    const start = dragStart;
    dragStart = null;
    if (state.mode === "global") {
      if (state.tool === "region") {
        const x0 = Math.min(start.x, end.x) / WIDTH;
        const x1 = Math.max(start.x, end.x) / WIDTH;
        const y0 = Math.min(start.y, end.y) / HEIGHT;
        const y1 = Math.max(start.y, end.y) / HEIGHT;
        if (x1 - x0 > 0.01 && y1 - y0 > 0.01) {
          addLayoutRegion(doc(), { cls: state.regionClass, bbox: [x0, y0, x1, y1] });
          retriever.notifyEdit(doc());
        }
      }
    } else if (state.tool === "pen") {
      penPoints.push(end);
      addStroke(doc(), { points: penPoints, thickness: 2, color: 0 });
      penPoints = [];
      retriever.notifyEdit(doc());
    } else if (state.tool === "text") {
      const text = window.prompt("Text:") ?? "";
      if (text) {
        addText(doc(), { text, position: end, fontLabel: state.fontLabel });
        retriever.notifyEdit(doc());
      }
    } else if (state.tool === "fontscan") {
      if (state.shownSlide === null) {
        showBanner("double-click a candidate to load its slide first");
      } else {
        const sel = {
          x: Math.min(start.x, end.x),
          y: Math.min(start.y, end.y),
          w: Math.abs(end.x - start.x),
          h: Math.abs(end.y - start.y),
        };
        try {
          const res = await fontScan(client, state.shownSlide, sel);
          if (res.applied) {
            state.fontLabel = res.label!;
            fontIndicator.textContent = `font: ${res.fontName} (${Math.round(
              res.confidence! * 100,
            )}%)`;
          } else {
            showBanner(res.hint!);
          }
        } catch (err) {
          showBanner(String(err));
        }
      }
    } else if (state.tool === "rect" || state.tool === "line" || state.tool === "arrow") {
      addShape(doc(), { kind: state.tool, from: start, to: end, thickness: 2, color: 0 });
      retriever.notifyEdit(doc());
    }
    repaint();
  });

  // Toolkit wiring.
  root.querySelectorAll<HTMLButtonElement>("[data-tool]").forEach((btn) => {
    btn.addEventListener("click", () => (state.tool = btn.dataset.tool as Tool));
  });
  root.querySelector<HTMLSelectElement>("#region-class")!.addEventListener("change", (e) => {
    state.regionClass = (e.target as HTMLSelectElement).value as LayoutClass;
  });
  root.querySelector<HTMLSelectElement>("#heat-class")!.addEventListener("change", (e) => {
    retriever.heatmapClass = (e.target as HTMLSelectElement).value;
    retriever.notifyEdit(doc());
  });
  root.querySelector<HTMLButtonElement>("#mode-switch")!.addEventListener("click", (e) => {
    state.mode = state.mode === "local" ? "global" : "local";
    state.tool = state.mode === "global" ? "region" : "pen";
    (e.target as HTMLButtonElement).textContent =
      state.mode === "local" ? "Switch to Global" : "Switch to Local";
    root.querySelector<HTMLElement>("#local-tools")!.hidden = state.mode !== "local";
    root.querySelector<HTMLElement>("#global-tools")!.hidden = state.mode !== "global";
    renderResultStrip();
    repaint();
  });
  root.querySelector<HTMLButtonElement>("#aux-lines")!.addEventListener("click", () => {
    state.auxLines = !state.auxLines;
    repaint();
  });
  root.querySelector<HTMLButtonElement>("#undo")!.addEventListener("click", () => {
    if (undoLast(doc())) retriever.notifyEdit(doc());
    repaint();
  });
  root.querySelector<HTMLButtonElement>("#save")!.addEventListener("click", () => {
    const bytes = saveCanvas(doc());
    const blob = new Blob([bytes.buffer as ArrayBuffer], { type: "image/png" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "design.png";
    a.click();
    URL.revokeObjectURL(a.href);
  });

  repaint();
}
