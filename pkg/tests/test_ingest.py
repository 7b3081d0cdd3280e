"""Slide extraction, annotation parsing, heuristic segmentation, and
diagram cropping."""

import json

import numpy as np
import pytest

from slideguide.errors import EmptyInput, RegionRangeError, SchemaError
from slideguide.ingest import (
    Diagram,
    LayoutClass,
    LayoutRegion,
    SlideLayout,
    extract_diagrams,
    extract_slides,
    parse_layout_annotation,
    segment_layout_heuristic,
    serialize_layout,
)
from slideguide.raster import binarize_otsu, dhash


def noisy_frame(base, rng, flip_pixels=30):
    """Copy of a slide with a few random pixels perturbed; keeps the
    dhash within a couple of bits of the original."""
    frame = base.copy()
    h, w = frame.shape
    ys = rng.integers(0, h, flip_pixels)
    xs = rng.integers(0, w, flip_pixels)
    frame[ys, xs] = rng.integers(0, 256, flip_pixels)
    return frame


def make_slide(seed):
    """A distinct slide: a random coarse pattern upscaled, so slide
    hashes land far apart while per-pixel noise barely moves them."""
    rng = np.random.default_rng(seed)
    coarse = rng.integers(0, 256, (9, 16), dtype=np.uint8)
    return coarse.repeat(10, axis=0).repeat(10, axis=1)


class TestExtractSlides:
    def test_constant_frames_collapse(self):
        a = make_slide(1)
        result = extract_slides([a, a.copy(), a.copy()], threshold=10)
        assert len(result) == 1 and result[0].frame_index == 0

    def test_maximal_change_emits_both(self):
        black = np.zeros((20, 20), dtype=np.uint8)
        ramp = np.tile(np.arange(0, 200, 10, dtype=np.uint8), (20, 1))
        assert len(extract_slides([black, ramp], threshold=10)) == 2

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            extract_slides([], threshold=10)

    def test_noisy_synthetic_deck(self):
        # 5 distinct slides x 30 noisy frames each -> exactly 5 at t=10.
        rng = np.random.default_rng(7)
        slides = [make_slide(s) for s in range(5)]
        for a in slides:
            for b in slides:
                if a is not b:
                    assert bin(dhash(a) ^ dhash(b)).count("1") > 10
        frames = []
        for s in slides:
            frames.append(s)
            frames.extend(noisy_frame(s, rng) for _ in range(29))
        for f, s in zip(frames, np.repeat(np.arange(5), 30)):
            assert bin(dhash(f) ^ dhash(slides[s])).count("1") <= 2
        result = extract_slides(frames, threshold=10)
        assert [r.frame_index for r in result] == [0, 30, 60, 90, 120]

    def test_threshold_64_emits_only_first(self):
        frames = [make_slide(s) for s in range(4)]
        assert len(extract_slides(frames, threshold=64)) == 1

    def test_emission_is_subsequence(self):
        rng = np.random.default_rng(3)
        frames = [
            rng.integers(0, 256, (24, 24), dtype=np.uint8) for _ in range(20)
        ]
        result = extract_slides(frames, threshold=5)
        indices = [r.frame_index for r in result]
        assert indices == sorted(set(indices))
        for r in result:
            assert r.slide is frames[r.frame_index]


class TestParseAnnotation:
    def test_basic(self):
        doc = json.dumps(
            {
                "slide_id": "s1",
                "regions": [{"class": "Title", "bbox": [0.1, 0.05, 0.9, 0.2]}],
            }
        )
        layout = parse_layout_annotation(doc)
        assert layout.slide_id == "s1"
        assert layout.regions[0].cls is LayoutClass.TITLE

    def test_empty_regions(self):
        layout = parse_layout_annotation('{"slide_id": "s2", "regions": []}')
        assert layout.regions == ()

    def test_inverted_bbox(self):
        doc = json.dumps(
            {"slide_id": "s", "regions": [{"class": "text", "bbox": [0.5, 0.1, 0.2, 0.3]}]}
        )
        with pytest.raises(RegionRangeError):
            parse_layout_annotation(doc)

    @pytest.mark.parametrize(
        "doc",
        [
            "not json",
            "[1,2]",
            '{"regions": []}',
            '{"slide_id": "s", "regions": [{"class": "banner", "bbox": [0,0,1,1]}]}',
            '{"slide_id": "s", "regions": [{"class": "text", "bbox": [0, 0, 1]}]}',
            '{"slide_id": "s"}',
        ],
    )
    def test_schema_errors(self, doc):
        with pytest.raises(SchemaError):
            parse_layout_annotation(doc)

    def test_round_trip(self):
        layout = SlideLayout(
            slide_id="rt",
            regions=(
                LayoutRegion(cls=LayoutClass.TITLE, bbox=(0.1, 0.0, 0.9, 0.2)),
                LayoutRegion(cls=LayoutClass.FIGURE, bbox=(0.2, 0.3, 0.8, 0.9)),
            ),
        )
        assert parse_layout_annotation(serialize_layout(layout)) == layout


class TestSegmentHeuristic:
    def test_blank_slide(self):
        assert segment_layout_heuristic(np.full((90, 160), 255, np.uint8)).regions == ()

    def test_solid_title_band(self):
        img = np.full((100, 200), 255, dtype=np.uint8)
        img[5:15, 20:180] = 0  # solid band: y in [0.05, 0.15], 80% width
        layout = segment_layout_heuristic(img, "s")
        assert len(layout.regions) == 1
        assert layout.regions[0].cls is LayoutClass.TITLE

    def test_planted_regions_accuracy(self):
        # 20 synthetic slides with known planted regions; class accuracy >= 0.9.
        rng = np.random.default_rng(11)
        correct = total = 0
        for _ in range(20):
            img = np.full((180, 320), 255, dtype=np.uint8)
            planted = []
            # Title: solid band high up, wide.
            tw = int(rng.integers(140, 280))
            img[10:28, 10 : 10 + tw] = 0
            planted.append((LayoutClass.TITLE, (10, 10, 10 + tw, 28)))
            # Text: dense block mid-slide.
            img[60:100, 20:120] = 0
            planted.append((LayoutClass.TEXT, (20, 60, 120, 100)))
            # Figure: sparse box outline, low density.
            img[120:170, 40:240] = 255
            img[120:122, 40:240] = 0
            img[168:170, 40:240] = 0
            img[120:170, 40:42] = 0
            img[120:170, 238:240] = 0
            planted.append((LayoutClass.FIGURE, (40, 120, 240, 170)))

            layout = segment_layout_heuristic(img, "s")
            for cls, (x0, y0, x1, y1) in planted:
                total += 1
                cx, cy = (x0 + x1) / 2 / 320, (y0 + y1) / 2 / 180
                for r in layout.regions:
                    bx0, by0, bx1, by1 = r.bbox
                    if bx0 <= cx <= bx1 and by0 <= cy <= by1 and r.cls is cls:
                        correct += 1
                        break
        assert correct / total >= 0.9


class TestExtractDiagrams:
    def layout_with(self, *regions):
        return SlideLayout(slide_id="s", regions=regions)

    def test_no_figures(self):
        img = np.full((50, 50), 255, np.uint8)
        layout = self.layout_with(
            LayoutRegion(cls=LayoutClass.TEXT, bbox=(0.1, 0.1, 0.9, 0.9))
        )
        assert extract_diagrams(img, layout) == []

    def test_full_frame_figure(self):
        rng = np.random.default_rng(5)
        img = rng.integers(0, 256, (40, 60), dtype=np.uint8)
        layout = self.layout_with(
            LayoutRegion(cls=LayoutClass.FIGURE, bbox=(0.0, 0.0, 1.0, 1.0))
        )
        (d,) = extract_diagrams(img, layout)
        assert d.diagram_id == "s-0"
        assert (d.mask == binarize_otsu(img, "ink-darker")).all()

    def test_two_planted_figures(self):
        img = np.full((100, 200), 255, dtype=np.uint8)
        img[10:40, 10:90] = 0    # 30x80 solid = 2400 ink pixels
        img[60:90, 110:190] = 0  # 30x80 solid
        layout = self.layout_with(
            LayoutRegion(cls=LayoutClass.FIGURE, bbox=(0.0, 0.0, 0.5, 0.5)),
            LayoutRegion(cls=LayoutClass.FIGURE, bbox=(0.5, 0.5, 1.0, 1.0)),
        )
        d1, d2 = extract_diagrams(img, layout)
        assert int(d1.mask.sum()) == 2400
        assert int(d2.mask.sum()) == 2400
        assert {d1.diagram_id, d2.diagram_id} == {"s-0", "s-1"}

    def test_count_matches_figure_regions(self):
        img = np.full((60, 60), 255, np.uint8)
        layout = self.layout_with(
            LayoutRegion(cls=LayoutClass.FIGURE, bbox=(0.0, 0.0, 0.5, 0.5)),
            LayoutRegion(cls=LayoutClass.TEXT, bbox=(0.5, 0.0, 1.0, 0.5)),
            LayoutRegion(cls=LayoutClass.FIGURE, bbox=(0.0, 0.5, 1.0, 1.0)),
        )
        diagrams = extract_diagrams(img, layout)
        n_figures = sum(r.cls is LayoutClass.FIGURE for r in layout.regions)
        assert len(diagrams) == n_figures
