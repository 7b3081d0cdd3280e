"""Global design stage: occupancy-grid layout features, similarity ranking,
and heat-map aggregation.

Layout features are 3-channel coverage grids (title / text / figure), a
deterministic stand-in for learned features: each cell holds the fraction
of its area covered by regions of that class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .ingest import LayoutClass, SlideLayout
from .raster import GrayImage

DEFAULT_GRID_W = 32
DEFAULT_GRID_H = 18
DEFAULT_TOP_K = 20

# Fixed channel order for feature grids and heat maps.
CHANNELS = (LayoutClass.TITLE, LayoutClass.TEXT, LayoutClass.FIGURE)
_CHANNEL_INDEX = {c: i for i, c in enumerate(CHANNELS)}


@dataclass(frozen=True)
class FeatureGrid:
    grid_w: int
    grid_h: int
    values: np.ndarray  # (3, grid_h, grid_w) float64, each in [0, 1]


@dataclass(frozen=True)
class HeatMap:
    grid_w: int
    grid_h: int
    class_filter: LayoutClass | None  # None means all classes
    counts: np.ndarray       # (grid_h, grid_w) int64
    intensities: np.ndarray  # (grid_h, grid_w) float64 in [0, 1]


@dataclass(frozen=True)
class RankEntry:
    slide_id: str
    score: float


@dataclass(frozen=True)
class LayoutRanking:
    entries: tuple[RankEntry, ...]


def layout_feature(
    layout: SlideLayout, grid_w: int = DEFAULT_GRID_W, grid_h: int = DEFAULT_GRID_H
) -> FeatureGrid:
    """Rasterize a layout into per-class cell-coverage fractions.

    Each region adds its exact rectangle/cell intersection area (as a
    fraction of cell area) to its class channel; cells clamp at 1.
    """
    if grid_w < 1 or grid_h < 1:
        raise ValueError(f"grid {grid_w}x{grid_h}")
    values = np.zeros((3, grid_h, grid_w), dtype=np.float64)
    # Work in cell units so cell-aligned regions give exact fractions.
    xs = np.arange(grid_w, dtype=np.float64)
    ys = np.arange(grid_h, dtype=np.float64)
    for region in layout.regions:
        x0, y0, x1, y1 = region.bbox
        ox = np.clip(np.minimum(x1 * grid_w, xs + 1) - np.maximum(x0 * grid_w, xs), 0.0, 1.0)
        oy = np.clip(np.minimum(y1 * grid_h, ys + 1) - np.maximum(y0 * grid_h, ys), 0.0, 1.0)
        frac = oy[:, None] * ox[None, :]
        ch = _CHANNEL_INDEX[region.cls]
        values[ch] = np.minimum(values[ch] + frac, 1.0)
    return FeatureGrid(grid_w=grid_w, grid_h=grid_h, values=values)


def layout_similarity(a: FeatureGrid, b: FeatureGrid) -> float:
    """Cosine similarity of two feature grids; 0 if either is all zero."""
    if (a.grid_w, a.grid_h) != (b.grid_w, b.grid_h):
        raise DimensionMismatch(
            f"{a.grid_w}x{a.grid_h} vs {b.grid_w}x{b.grid_h}"
        )
    va, vb = a.values.ravel(), b.values.ravel()
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(va, vb) / (na * nb))


def retrieve_layouts(query: SlideLayout, corpus, k: int) -> LayoutRanking:
    """Rank the corpus's slides by layout similarity to the query.

    Ties break by ascending slide_id. ``corpus`` needs ``slide_ids`` and a
    stacked ``layout_feature_matrix`` (see corpus_store.Corpus).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    ids = corpus.slide_ids
    if not ids or k == 0:
        return LayoutRanking(entries=())
    qv = layout_feature(query, corpus.grid_w, corpus.grid_h).values.ravel()
    mat = corpus.layout_feature_matrix  # (n_slides, 3*gh*gw)
    norms = corpus.layout_feature_norms
    qn = np.linalg.norm(qv)
    if qn == 0.0:
        scores = np.zeros(len(ids))
    else:
        scores = np.where(norms > 0.0, (mat @ qv) / np.maximum(norms * qn, 1e-300), 0.0)
    order = np.lexsort((np.asarray(ids), -scores))[:k]
    return LayoutRanking(
        entries=tuple(RankEntry(slide_id=ids[i], score=float(scores[i])) for i in order)
    )


def heatmap(
    corpus_subset: list[SlideLayout],
    class_filter: LayoutClass | None = None,
    grid_w: int = DEFAULT_GRID_W,
    grid_h: int = DEFAULT_GRID_H,
) -> HeatMap:
    """Count, per cell, the (slide, region) pairs of the filtered class
    whose bbox contains the cell center; intensities are counts scaled by
    the max count."""
    if grid_w < 1 or grid_h < 1:
        raise ValueError(f"grid {grid_w}x{grid_h}")
    counts = np.zeros((grid_h, grid_w), dtype=np.int64)
    cx = (np.arange(grid_w) + 0.5) / grid_w
    cy = (np.arange(grid_h) + 0.5) / grid_h
    for layout in corpus_subset:
        for region in layout.regions:
            if class_filter is not None and region.cls is not class_filter:
                continue
            x0, y0, x1, y1 = region.bbox
            inx = (cx >= x0) & (cx < x1)
            iny = (cy >= y0) & (cy < y1)
            counts += iny[:, None] & inx[None, :]
    peak = counts.max()
    intensities = counts / peak if peak > 0 else np.zeros_like(counts, dtype=np.float64)
    return HeatMap(
        grid_w=grid_w,
        grid_h=grid_h,
        class_filter=class_filter,
        counts=counts,
        intensities=intensities.astype(np.float64),
    )


def heatmap_for_sketch(
    query: SlideLayout | None,
    corpus,
    class_filter: LayoutClass | None = None,
    top_k: int = DEFAULT_TOP_K,
) -> HeatMap:
    """Heat map that follows the sketch: aggregate over the top-k layouts
    retrieved for the query, or over the whole corpus when the query is
    absent or empty."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    if query is None or not query.regions:
        subset = [corpus.layouts[sid] for sid in corpus.slide_ids]
    else:
        ranking = retrieve_layouts(query, corpus, top_k)
        subset = [corpus.layouts[e.slide_id] for e in ranking.entries]
    return heatmap(subset, class_filter, corpus.grid_w, corpus.grid_h)


def render_heatmap(h: HeatMap, cell_px: int = 16) -> GrayImage:
    """Render darker-is-denser: pixel = round(255 * (1 - intensity)),
    nearest-neighbor upscaled by ``cell_px`` per cell."""
    shade = np.rint(255.0 * (1.0 - h.intensities)).astype(np.uint8)
    return np.repeat(np.repeat(shade, cell_px, axis=0), cell_px, axis=1)
