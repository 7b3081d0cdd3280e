"""Slide deck ingestion: frame deduplication, layout labeling, diagram crops."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, RegionRangeError, SchemaError
from .raster import (
    BinImage,
    GrayImage,
    binarize_otsu,
    connected_components,
    dhash,
    hamming,
)

DEFAULT_HASH_THRESHOLD = 10


class LayoutClass(enum.Enum):
    TITLE = "title"
    TEXT = "text"
    FIGURE = "figure"


@dataclass(frozen=True)
class LayoutRegion:
    """A labeled region in normalized slide coordinates."""

    cls: LayoutClass
    bbox: tuple[float, float, float, float]  # x0, y0, x1, y1 in [0, 1]

    def __post_init__(self):
        x0, y0, x1, y1 = self.bbox
        if not (0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0):
            raise RegionRangeError(f"bad bbox {self.bbox}")


@dataclass(frozen=True)
class SlideLayout:
    slide_id: str
    regions: tuple[LayoutRegion, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        titles = [r for r in self.regions if r.cls is LayoutClass.TITLE]
        if len(titles) > 1:
            raise RegionRangeError(f"{self.slide_id}: more than one title region")


@dataclass(frozen=True)
class Diagram:
    diagram_id: str
    slide_id: str
    mask: BinImage


@dataclass(frozen=True)
class ExtractedSlide:
    slide: GrayImage
    frame_index: int


def extract_slides(
    frames: list[GrayImage], threshold: int = DEFAULT_HASH_THRESHOLD
) -> list[ExtractedSlide]:
    """Deduplicate an ordered frame sequence into slides.

    The first frame is always emitted. A later frame is emitted when its
    dhash differs from the hash of the *last emitted* slide by more than
    ``threshold`` bits; anchoring on the last emission keeps slow fades
    from leaking duplicates.
    """
    if not frames:
        raise EmptyInput("no frames")
    if not 0 <= threshold <= 64:
        raise ValueError(f"threshold {threshold} outside [0, 64]")

    out = [ExtractedSlide(slide=frames[0], frame_index=0)]
    anchor = dhash(frames[0])
    for i, frame in enumerate(frames[1:], start=1):
        h = dhash(frame)
        if hamming(h, anchor) > threshold:
            out.append(ExtractedSlide(slide=frame, frame_index=i))
            anchor = h
    return out


def parse_layout_annotation(doc: str) -> SlideLayout:
    """Parse a ``.layout.json`` annotation document.

    Schema: ``{"slide_id": str, "regions": [{"class": "title"|"text"|
    "figure", "bbox": [x0,y0,x1,y1]}]}``. Class names match
    case-insensitively.

    Raises:
        SchemaError: missing field, wrong type, or unknown class name.
        RegionRangeError: bbox outside [0, 1] or inverted.
    """
    try:
        obj = json.loads(doc)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SchemaError("annotation root must be an object")
    slide_id = obj.get("slide_id")
    if not isinstance(slide_id, str) or not slide_id:
        raise SchemaError("missing or empty slide_id")
    raw_regions = obj.get("regions")
    if not isinstance(raw_regions, list):
        raise SchemaError("missing regions list")

    regions = []
    for r in raw_regions:
        if not isinstance(r, dict):
            raise SchemaError("region entries must be objects")
        name = r.get("class")
        if not isinstance(name, str):
            raise SchemaError("region missing class")
        try:
            cls = LayoutClass(name.lower())
        except ValueError:
            raise SchemaError(f"unknown layout class {name!r}") from None
        bbox = r.get("bbox")
        if (
            not isinstance(bbox, (list, tuple))
            or len(bbox) != 4
            or not all(isinstance(v, (int, float)) for v in bbox)
        ):
            raise SchemaError(f"bad bbox {bbox!r}")
        regions.append(LayoutRegion(cls=cls, bbox=tuple(float(v) for v in bbox)))
    return SlideLayout(slide_id=slide_id, regions=tuple(regions))


def serialize_layout(layout: SlideLayout) -> str:
    """Inverse of parse_layout_annotation, with stable key order."""
    obj = {
        "slide_id": layout.slide_id,
        "regions": [
            {"class": r.cls.value, "bbox": list(r.bbox)} for r in layout.regions
        ],
    }
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# Heuristic segmenter constants: merge gap as a fraction of slide size,
# title band depth / minimum width, figure density and area cutoffs.
_MERGE_GAP = 0.02
_TITLE_BAND = 0.25
_TITLE_MIN_WIDTH = 0.30
_FIGURE_MAX_DENSITY = 0.25
_FIGURE_MIN_AREA = 0.20


def _merge_boxes(boxes: list[list[int]], gap_x: float, gap_y: float) -> list[list[int]]:
    """Union boxes whose gaps are below the merge threshold, to fixpoint."""
    boxes = [list(b) for b in boxes]
    changed = True
    while changed:
        changed = False
        for i in range(len(boxes)):
            if boxes[i] is None:
                continue
            for j in range(i + 1, len(boxes)):
                if boxes[j] is None:
                    continue
                a, b = boxes[i], boxes[j]
                dx = max(b[0] - a[2], a[0] - b[2], 0)
                dy = max(b[1] - a[3], a[1] - b[3], 0)
                if dx < gap_x and dy < gap_y:
                    boxes[i] = [
                        min(a[0], b[0]),
                        min(a[1], b[1]),
                        max(a[2], b[2]),
                        max(a[3], b[3]),
                    ]
                    boxes[j] = None
                    changed = True
    return [b for b in boxes if b is not None]


def segment_layout_heuristic(slide: GrayImage, slide_id: str = "") -> SlideLayout:
    """Label a slide's regions without annotations.

    Binarizes ink-darker, merges nearby connected components, then
    classifies each merged region: a wide band fully inside the top
    quarter is the title; sparse or large regions are figures; the rest
    is text. Only the widest title candidate keeps the label.
    """
    h, w = slide.shape
    mask = binarize_otsu(slide, "ink-darker")
    comps = connected_components(mask)
    if not comps:
        return SlideLayout(slide_id=slide_id, regions=())

    merged = _merge_boxes(
        [list(c.bbox) for c in comps], _MERGE_GAP * w, _MERGE_GAP * h
    )
    merged.sort(key=lambda b: (b[1], b[0]))

    classes: list[LayoutClass] = []
    for x0, y0, x1, y1 in merged:
        box_w, box_h = x1 - x0, y1 - y0
        density = np.count_nonzero(mask[y0:y1, x0:x1]) / (box_w * box_h)
        if y1 <= _TITLE_BAND * h and box_w >= _TITLE_MIN_WIDTH * w:
            classes.append(LayoutClass.TITLE)
        elif density < _FIGURE_MAX_DENSITY or box_w * box_h >= _FIGURE_MIN_AREA * w * h:
            classes.append(LayoutClass.FIGURE)
        else:
            classes.append(LayoutClass.TEXT)

    # At most one title: the widest candidate wins, others demote to text.
    title_idx = [i for i, c in enumerate(classes) if c is LayoutClass.TITLE]
    if len(title_idx) > 1:
        widest = max(title_idx, key=lambda i: merged[i][2] - merged[i][0])
        for i in title_idx:
            if i != widest:
                classes[i] = LayoutClass.TEXT

    regions = tuple(
        LayoutRegion(cls=c, bbox=(x0 / w, y0 / h, x1 / w, y1 / h))
        for c, (x0, y0, x1, y1) in zip(classes, merged)
    )
    return SlideLayout(slide_id=slide_id, regions=regions)


def extract_diagrams(slide: GrayImage, layout: SlideLayout) -> list[Diagram]:
    """Binarized crops of the layout's figure regions.

    Diagram ids are ``<slide_id>-<ordinal>`` over the figure regions in
    layout order.
    """
    h, w = slide.shape
    out = []
    ordinal = 0
    for region in layout.regions:
        if region.cls is not LayoutClass.FIGURE:
            continue
        x0, y0, x1, y1 = region.bbox
        px0, py0 = int(round(x0 * w)), int(round(y0 * h))
        px1, py1 = max(int(round(x1 * w)), px0 + 1), max(int(round(y1 * h)), py0 + 1)
        crop = slide[py0:py1, px0:px1]
        out.append(
            Diagram(
                diagram_id=f"{layout.slide_id}-{ordinal}",
                slide_id=layout.slide_id,
                mask=binarize_otsu(crop, "ink-darker"),
            )
        )
        ordinal += 1
    return out
