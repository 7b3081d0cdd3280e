// Thin typed client over the retrieval service's HTTP/JSON endpoints.
// fetch is injectable so tests can script responses and delays.

import type { LayoutRegion } from "./document.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface LayoutEntry {
  slide_id: string;
  score: number;
  url: string;
}

export interface DiagramEntry {
  diagram_id: string;
  score: number;
  good_match_count: number;
  url: string;
  shadow_default: boolean;
}

export interface RetrievalResponse<E> {
  request: unknown;
  entries: E[];
  elapsed_ms: number;
}

export interface HeatmapResponse {
  grid_w: number;
  grid_h: number;
  intensities: number[];
}

export interface FontResponse {
  label: number;
  font_name: string;
  confidence: number;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service ${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const parsed = (await res.json()) as { detail?: unknown };
        if (parsed.detail !== undefined) detail = JSON.stringify(parsed.detail);
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ServiceError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  async health(): Promise<{ status: string; slides: number; diagrams: number }> {
    const res = await this.fetchImpl(this.baseUrl + "/healthz");
    if (!res.ok) throw new ServiceError(res.status, res.statusText);
    return (await res.json()) as { status: string; slides: number; diagrams: number };
  }

  retrieveLayout(regions: LayoutRegion[], k?: number): Promise<RetrievalResponse<LayoutEntry>> {
    const body = {
      regions: regions.map((r) => ({ class: r.cls, bbox: r.bbox })),
      ...(k !== undefined ? { k } : {}),
    };
    return this.post("/retrieve/layout", body);
  }

  heatmap(cls: string, regions?: LayoutRegion[], k?: number): Promise<HeatmapResponse> {
    const body: Record<string, unknown> = { class: cls };
    if (regions !== undefined) body.regions = regions.map((r) => ({ class: r.cls, bbox: r.bbox }));
    if (k !== undefined) body.k = k;
    return this.post("/heatmap", body);
  }

  retrieveDiagram(sketchPngBase64: string, k?: number): Promise<RetrievalResponse<DiagramEntry>> {
    const body = { sketch_png_base64: sketchPngBase64, ...(k !== undefined ? { k } : {}) };
    return this.post("/retrieve/diagram", body);
  }

  classifyFont(cropPngBase64: string): Promise<FontResponse> {
    return this.post("/font/classify", { crop_png_base64: cropPngBase64 });
  }

  async fetchImage(path: string): Promise<Uint8Array> {
    const res = await this.fetchImpl(this.baseUrl + path);
    if (!res.ok) throw new ServiceError(res.status, res.statusText);
    return new Uint8Array(await res.arrayBuffer());
  }
}
