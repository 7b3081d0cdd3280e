"""HTTP retrieval service: the bridge between the engine and the canvas UI.

All endpoints are stateless over an immutable corpus loaded at startup;
sketch and crop uploads arrive as base64 PNG inside JSON bodies.
"""

from __future__ import annotations

import base64
import io
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response
from PIL import Image
from pydantic import BaseModel, Field

from .corpus_store import Corpus
from .errors import EmptyGlyph, ModelUntrained, SlideGuideError
from .fontnet import FontModel, classify_font
from .ingest import LayoutClass, LayoutRegion, SlideLayout
from .layout import heatmap_for_sketch, retrieve_layouts
from .matching import MatcherConfig, retrieve_diagrams
from .raster import GrayImage

DEFAULT_LAYOUT_K = 9
DEFAULT_DIAGRAM_K = 6
DEFAULT_HEATMAP_K = 20


@dataclass(frozen=True)
class ServiceConfig:
    corpus_dir: str = ""
    port: int = 8080
    layout_k: int = DEFAULT_LAYOUT_K
    diagram_k: int = DEFAULT_DIAGRAM_K
    heatmap_k: int = DEFAULT_HEATMAP_K
    matcher: MatcherConfig = field(default_factory=MatcherConfig)
    cors_origins: tuple[str, ...] = ("*",)

    def __post_init__(self):
        if self.layout_k <= 0 or self.diagram_k <= 0 or self.heatmap_k <= 0:
            raise ValueError("top-k values must be positive")


class LayoutQuery(BaseModel):
    regions: list[dict] = []
    k: int | None = None


class HeatmapQuery(BaseModel):
    cls: str = Field(default="all", alias="class")
    regions: list[dict] | None = None
    k: int | None = None

    model_config = {"populate_by_name": True}


class SketchQuery(BaseModel):
    sketch_png_base64: str
    k: int | None = None


class CropQuery(BaseModel):
    crop_png_base64: str


def _parse_regions(raw: list[dict]) -> SlideLayout:
    try:
        regions = tuple(
            LayoutRegion(
                cls=LayoutClass(r["class"].lower()), bbox=tuple(float(v) for v in r["bbox"])
            )
            for r in raw
        )
    except (KeyError, ValueError, TypeError, SlideGuideError) as exc:
        raise HTTPException(status_code=422, detail=f"bad regions: {exc}") from exc
    return SlideLayout(slide_id="query", regions=regions)


def _decode_png(b64: str) -> GrayImage:
    try:
        raw = base64.b64decode(b64)
        with Image.open(io.BytesIO(raw)) as im:
            return np.asarray(im.convert("L"), dtype=np.uint8)
    except Exception as exc:
        raise HTTPException(status_code=422, detail=f"bad PNG payload: {exc}") from exc


def _parse_class(name: str) -> LayoutClass | None:
    if name.lower() == "all":
        return None
    try:
        return LayoutClass(name.lower())
    except ValueError:
        raise HTTPException(status_code=422, detail=f"unknown class {name!r}") from None


def create_app(
    corpus: Corpus,
    font_model: FontModel | None = None,
    config: ServiceConfig = ServiceConfig(),
) -> FastAPI:
    app = FastAPI(title="slideguide")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "slides": len(corpus.slide_ids),
            "diagrams": len(corpus.diagram_features),
        }

    @app.post("/retrieve/layout")
    def retrieve_layout(q: LayoutQuery):
        t0 = time.perf_counter()
        query = _parse_regions(q.regions)
        ranking = retrieve_layouts(query, corpus, q.k or config.layout_k)
        return {
            "request": {"regions": q.regions, "k": q.k or config.layout_k},
            "entries": [
                {
                    "slide_id": e.slide_id,
                    "score": e.score,
                    "url": f"/slide/{e.slide_id}.png",
                }
                for e in ranking.entries
            ],
            "elapsed_ms": (time.perf_counter() - t0) * 1000.0,
        }

    @app.post("/heatmap")
    def heatmap_endpoint(q: HeatmapQuery):
        t0 = time.perf_counter()
        cls = _parse_class(q.cls)
        query = _parse_regions(q.regions) if q.regions is not None else None
        hm = heatmap_for_sketch(query, corpus, cls, q.k or config.heatmap_k)
        return {
            "grid_w": hm.grid_w,
            "grid_h": hm.grid_h,
            "class": q.cls.lower(),
            "intensities": [
                [float(v) for v in row] for row in hm.intensities
            ],
            "elapsed_ms": (time.perf_counter() - t0) * 1000.0,
        }

    @app.post("/retrieve/diagram")
    def retrieve_diagram(q: SketchQuery):
        t0 = time.perf_counter()
        sketch = _decode_png(q.sketch_png_base64)
        hits = retrieve_diagrams(sketch, corpus, q.k or config.diagram_k, config.matcher)
        return {
            "request": {"k": q.k or config.diagram_k},
            "entries": [
                {
                    "diagram_id": h.diagram_id,
                    "score": h.S,
                    "good_match_count": h.good_match_count,
                    "url": f"/diagram/{h.diagram_id}.png",
                    "shadow_default": i == 0,
                }
                for i, h in enumerate(hits)
            ],
            "elapsed_ms": (time.perf_counter() - t0) * 1000.0,
        }

    @app.post("/font/classify")
    def font_classify(q: CropQuery):
        if font_model is None:
            raise HTTPException(status_code=503, detail="no font model loaded")
        crop = _decode_png(q.crop_png_base64)
        try:
            label, name, confidence = classify_font(crop, font_model)
        except EmptyGlyph:
            raise HTTPException(status_code=422, detail="empty_glyph") from None
        except ModelUntrained:
            raise HTTPException(status_code=503, detail="model untrained") from None
        return {"label": label, "font_name": name, "confidence": confidence}

    def _serve_png(path: Path) -> Response:
        if not path.exists():
            raise HTTPException(status_code=404, detail="not found")
        return Response(content=path.read_bytes(), media_type="image/png")

    @app.get("/slide/{slide_id}.png")
    def slide_png(slide_id: str):
        if corpus.root is None or slide_id not in corpus.layouts:
            raise HTTPException(status_code=404, detail="unknown slide")
        return _serve_png(corpus.root / "slides" / f"{slide_id}.png")

    @app.get("/diagram/{diagram_id}.png")
    def diagram_png(diagram_id: str):
        if corpus.root is None or diagram_id not in corpus.diagram_features:
            raise HTTPException(status_code=404, detail="unknown diagram")
        return _serve_png(corpus.root / "diagrams" / f"{diagram_id}.png")

    return app
