"""Persistent corpus: slides, layouts, diagram masks, cached keypoint
features, and a JSON index manifest.

Directory layout::

    index.json
    slides/<id>.png
    layouts/<id>.layout.json
    diagrams/<id>.png
    features/<id>.sgfd
    fonts/model.sgfm        (optional, written by font training)

The corpus is built once (single writer) and immutable after load.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    AnnotationMismatch,
    CorruptIndex,
    MissingArtifact,
    VersionMismatch,
)
from .features import (
    DEFAULT_PATTERN_SEED,
    FeatureConfig,
    KeypointSet,
    SamplingPattern,
    extract_features,
    normalize_size,
    read_sgfd,
    write_sgfd,
)
from .ingest import (
    DEFAULT_HASH_THRESHOLD,
    SlideLayout,
    extract_diagrams,
    extract_slides,
    parse_layout_annotation,
    segment_layout_heuristic,
    serialize_layout,
)
from .layout import DEFAULT_GRID_H, DEFAULT_GRID_W, FeatureGrid, layout_feature
from .raster import GrayImage, load_image, save_image

log = logging.getLogger(__name__)

INDEX_VERSION = 1


@dataclass(frozen=True)
class CorpusConfig:
    hash_threshold: int = DEFAULT_HASH_THRESHOLD
    grid_w: int = DEFAULT_GRID_W
    grid_h: int = DEFAULT_GRID_H
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)


@dataclass
class Corpus:
    """Immutable in-memory view of a corpus."""

    root: Path | None
    grid_w: int
    grid_h: int
    pattern_seed: int
    feature_config: FeatureConfig
    pattern: SamplingPattern
    slide_ids: list[str]
    layouts: dict[str, SlideLayout]
    layout_features: dict[str, FeatureGrid]
    diagram_features: dict[str, KeypointSet]
    diagram_slide: dict[str, str]
    layout_feature_matrix: np.ndarray = field(repr=False, default=None)
    layout_feature_norms: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.layout_feature_matrix is None:
            n = len(self.slide_ids)
            dim = 3 * self.grid_h * self.grid_w
            mat = np.zeros((n, dim), dtype=np.float64)
            for i, sid in enumerate(self.slide_ids):
                mat[i] = self.layout_features[sid].values.ravel()
            self.layout_feature_matrix = mat
            self.layout_feature_norms = np.linalg.norm(mat, axis=1)

    @staticmethod
    def from_parts(
        layouts: dict[str, SlideLayout],
        diagram_features: dict[str, KeypointSet] | None = None,
        grid_w: int = DEFAULT_GRID_W,
        grid_h: int = DEFAULT_GRID_H,
        feature_config: FeatureConfig = FeatureConfig(),
    ) -> "Corpus":
        """In-memory corpus, mainly for tests and benchmarks."""
        slide_ids = sorted(layouts)
        return Corpus(
            root=None,
            grid_w=grid_w,
            grid_h=grid_h,
            pattern_seed=feature_config.seed,
            feature_config=feature_config,
            pattern=SamplingPattern.generate(feature_config.seed),
            slide_ids=slide_ids,
            layouts=dict(layouts),
            layout_features={
                sid: layout_feature(layouts[sid], grid_w, grid_h) for sid in slide_ids
            },
            diagram_features=dict(diagram_features or {}),
            diagram_slide={},
        )

    @property
    def diagram_ids(self) -> list[str]:
        return sorted(self.diagram_features)


def _load_annotations(annotation_paths) -> dict[str, SlideLayout]:
    out = {}
    for path in sorted(Path(p) for p in annotation_paths):
        layout = parse_layout_annotation(path.read_text())
        out[layout.slide_id] = layout
    return out


def _mask_to_gray(mask: np.ndarray) -> GrayImage:
    """Diagram masks persist as ink=0, background=255 grayscale."""
    return np.where(mask, 0, 255).astype(np.uint8)


def build_corpus(
    out_dir,
    slides: dict[str, GrayImage] | None = None,
    frames: list | None = None,
    annotation_paths=(),
    config: CorpusConfig = CorpusConfig(),
) -> dict:
    """Build and persist a corpus; returns the index as a dict.

    ``slides`` maps slide_id to image; alternatively ``frames`` is an
    ordered list of (name, image) pairs that is first deduplicated into
    slides. Slides with no annotation fall back to the heuristic
    segmenter. Idempotent: identical inputs and config produce
    byte-identical artifacts.

    Raises:
        AnnotationMismatch: an annotation's slide_id matches no slide.
    """
    out = Path(out_dir)
    for sub in ("slides", "layouts", "diagrams", "features"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    if slides is None:
        slides = {}
        if frames:
            emitted = extract_slides([img for _, img in frames], config.hash_threshold)
            for es in emitted:
                slides[frames[es.frame_index][0]] = es.slide

    annotations = _load_annotations(annotation_paths)
    unknown = set(annotations) - set(slides)
    if unknown:
        raise AnnotationMismatch(f"annotations for unknown slides: {sorted(unknown)}")

    pattern = SamplingPattern.generate(config.feature_config.seed)
    entries = []
    diagram_entries = []
    for slide_id in sorted(slides):
        img = slides[slide_id]
        save_image(img, out / "slides" / f"{slide_id}.png")
        layout = annotations.get(slide_id)
        if layout is None:
            layout = segment_layout_heuristic(img, slide_id)
        (out / "layouts" / f"{slide_id}.layout.json").write_text(
            serialize_layout(layout)
        )
        diagram_ids = []
        for diagram in extract_diagrams(img, layout):
            save_image(_mask_to_gray(diagram.mask), out / "diagrams" / f"{diagram.diagram_id}.png")
            ks = extract_features(
                _mask_to_gray(diagram.mask), config.feature_config, pattern
            )
            write_sgfd(
                out / "features" / f"{diagram.diagram_id}.sgfd",
                ks,
                config.feature_config.seed,
            )
            diagram_ids.append(diagram.diagram_id)
            diagram_entries.append(
                {
                    "diagram_id": diagram.diagram_id,
                    "mask_path": f"diagrams/{diagram.diagram_id}.png",
                    "feature_cache_path": f"features/{diagram.diagram_id}.sgfd",
                }
            )
        entries.append(
            {
                "slide_id": slide_id,
                "slide_path": f"slides/{slide_id}.png",
                "layout_path": f"layouts/{slide_id}.layout.json",
                "diagram_ids": diagram_ids,
            }
        )

    index = {
        "version": INDEX_VERSION,
        "pattern_seed": config.feature_config.seed,
        "fast_t": config.feature_config.t,
        "max_keypoints": config.feature_config.max_keypoints,
        "hash_threshold": config.hash_threshold,
        "grid_w": config.grid_w,
        "grid_h": config.grid_h,
        "entries": entries,
        "diagrams": diagram_entries,
    }
    (out / "index.json").write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")
    return index


def load_corpus(corpus_dir) -> Corpus:
    """Eagerly load and validate a corpus directory.

    Missing feature caches are recomputed from the diagram masks (with a
    warning); anything else missing is fatal.

    Raises:
        CorruptIndex, VersionMismatch, MissingArtifact.
    """
    root = Path(corpus_dir)
    index_path = root / "index.json"
    if not index_path.exists():
        raise MissingArtifact(f"{index_path} not found")
    try:
        index = json.loads(index_path.read_text())
    except json.JSONDecodeError as exc:
        raise CorruptIndex(f"{index_path}: {exc}") from exc
    if not isinstance(index, dict) or "version" not in index:
        raise CorruptIndex(f"{index_path}: missing version")
    if index["version"] != INDEX_VERSION:
        raise VersionMismatch(f"index version {index['version']}")

    try:
        pattern_seed = int(index["pattern_seed"])
        grid_w, grid_h = int(index["grid_w"]), int(index["grid_h"])
        entries = index["entries"]
        diagram_entries = index["diagrams"]
        feature_config = FeatureConfig(
            t=int(index["fast_t"]),
            max_keypoints=int(index["max_keypoints"]),
            seed=pattern_seed,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptIndex(f"{index_path}: {exc}") from exc

    pattern = SamplingPattern.generate(pattern_seed)
    layouts: dict[str, SlideLayout] = {}
    layout_features: dict[str, FeatureGrid] = {}
    diagram_slide: dict[str, str] = {}
    slide_ids = []
    for e in entries:
        sid = e["slide_id"]
        if sid in layouts:
            raise CorruptIndex(f"duplicate slide_id {sid}")
        for key in ("slide_path", "layout_path"):
            if not (root / e[key]).exists():
                raise MissingArtifact(f"{root / e[key]} referenced by {sid}")
        layouts[sid] = parse_layout_annotation((root / e["layout_path"]).read_text())
        layout_features[sid] = layout_feature(layouts[sid], grid_w, grid_h)
        slide_ids.append(sid)
        for did in e["diagram_ids"]:
            diagram_slide[did] = sid

    diagram_features: dict[str, KeypointSet] = {}
    for d in diagram_entries:
        did = d["diagram_id"]
        if did in diagram_features:
            raise CorruptIndex(f"duplicate diagram_id {did}")
        mask_path = root / d["mask_path"]
        if not mask_path.exists():
            raise MissingArtifact(f"{mask_path} referenced by {did}")
        cache_path = root / d["feature_cache_path"]
        if cache_path.exists():
            mask = load_image(mask_path)
            nh, nw = normalize_size(mask).shape
            ks, seed = read_sgfd(cache_path, source_dims=(nw, nh))
            if seed != pattern_seed:
                raise VersionMismatch(
                    f"{cache_path}: pattern seed {seed} != index {pattern_seed}"
                )
        else:
            log.warning("feature cache missing for %s; recomputing", did)
            ks = extract_features(load_image(mask_path), feature_config, pattern)
        diagram_features[did] = ks

    return Corpus(
        root=root,
        grid_w=grid_w,
        grid_h=grid_h,
        pattern_seed=pattern_seed,
        feature_config=feature_config,
        pattern=pattern,
        slide_ids=sorted(slide_ids),
        layouts=layouts,
        layout_features=layout_features,
        diagram_features=diagram_features,
        diagram_slide=diagram_slide,
    )
