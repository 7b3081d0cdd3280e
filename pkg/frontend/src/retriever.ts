// Debounced retrieval loop and shadow-guidance state.
//
// Every edit notifies the retriever; 300 ms after the last edit in a mode
// it issues that mode's retrieval request. Responses carry a sequence
// number so a slow reply that arrives after a newer one is dropped rather
// than clobbering fresher guidance.

import type { ApiClient, DiagramEntry, HeatmapResponse, LayoutEntry } from "./client.js";
import type { CanvasDocument } from "./document.js";
import { encodePng, rasterizeDocument, toBase64 } from "./raster.js";

export const DEBOUNCE_MS = 300;

export interface GuidanceState {
  candidates: DiagramEntry[];
  activeShadow: string | null; // diagram_id
  pinned: string | null; // pinned diagram_id, survives refreshes
  userSelected: boolean; // user clicked a candidate since the last reset
}

export interface GlobalResults {
  layouts: LayoutEntry[];
  heatmap: HeatmapResponse | null;
}

export interface RetrieverEvents {
  onGuidance?: (state: GuidanceState) => void;
  onGlobalResults?: (results: GlobalResults) => void;
  onError?: (message: string) => void; // non-blocking banner
}

export class DebouncedRetriever {
  readonly guidance: GuidanceState = {
    candidates: [],
    activeShadow: null,
    pinned: null,
    userSelected: false,
  };
  readonly globalResults: GlobalResults = { layouts: [], heatmap: null };
  heatmapClass = "all";
  requestCount = 0; // requests actually issued (debounce contract metric)

  private timer: ReturnType<typeof setTimeout> | null = null;
  private seq = 0; // last issued request
  private applied = 0; // newest response applied so far

  constructor(
    private readonly client: ApiClient,
    private readonly events: RetrieverEvents = {},
    private readonly debounceMs: number = DEBOUNCE_MS,
  ) {}

  /** Call on every document edit; restarts the quiescence timer. */
  notifyEdit(doc: CanvasDocument): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.issue(doc);
    }, this.debounceMs);
  }

  /** Force the pending request immediately (e.g. mode switch). */
  flush(doc: CanvasDocument): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    return this.issue(doc);
  }

  private async issue(doc: CanvasDocument): Promise<void> {
    const seq = ++this.seq;
    this.requestCount++;
    try {
      if (doc.mode === "global") {
        const [layouts, heatmap] = await Promise.all([
          this.client.retrieveLayout(doc.layoutRegions),
          this.client.heatmap(this.heatmapClass, doc.layoutRegions),
        ]);
        if (seq <= this.applied) return; // superseded while in flight
        this.applied = seq;
        this.globalResults.layouts = layouts.entries;
        this.globalResults.heatmap = heatmap;
        this.events.onGlobalResults?.(this.globalResults);
      } else {
        const png = encodePng(rasterizeDocument(doc));
        const res = await this.client.retrieveDiagram(toBase64(png));
        if (seq <= this.applied) return;
        this.applied = seq;
        this.applyCandidates(res.entries);
      }
    } catch (err) {
      this.events.onError?.(err instanceof Error ? err.message : String(err));
    }
  }

  private applyCandidates(entries: DiagramEntry[]): void {
    const g = this.guidance;
    g.candidates = entries;
    const ids = new Set(entries.map((e) => e.diagram_id));
    if (g.pinned !== null && ids.has(g.pinned)) {
      g.activeShadow = g.pinned;
    } else if (g.userSelected && g.activeShadow !== null && ids.has(g.activeShadow)) {
      // keep the user's explicit choice as long as it is still a candidate
    } else {
      g.activeShadow = entries.length ? entries[0].diagram_id : null;
      g.userSelected = false;
    }
    this.events.onGuidance?.(g);
  }

  /** User clicked a candidate in the results strip. */
  selectShadow(diagramId: string): void {
    if (!this.guidance.candidates.some((e) => e.diagram_id === diagramId)) {
      throw new Error(`unknown candidate ${diagramId}`);
    }
    this.guidance.activeShadow = diagramId;
    this.guidance.userSelected = true;
    this.events.onGuidance?.(this.guidance);
  }

  /** User toggled a candidate's pin checkbox. */
  togglePin(diagramId: string): void {
    if (this.guidance.pinned === diagramId) {
      this.guidance.pinned = null;
    } else {
      if (!this.guidance.candidates.some((e) => e.diagram_id === diagramId)) {
        throw new Error(`unknown candidate ${diagramId}`);
      }
      this.guidance.pinned = diagramId;
      this.guidance.activeShadow = diagramId;
    }
    this.events.onGuidance?.(this.guidance);
  }
}
