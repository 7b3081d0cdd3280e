"""Corpus build/load round trips, artifact validation, rebuild determinism."""

import json

import numpy as np
import pytest

from slideguide.corpus_store import CorpusConfig, build_corpus, load_corpus
from slideguide.errors import (
    AnnotationMismatch,
    CorruptIndex,
    MissingArtifact,
    VersionMismatch,
)
from slideguide.ingest import LayoutClass
from tests.conftest import box_and_arrow_diagram, draw_rect


def slide_with_figure(seed, size=(360, 640)):
    """Slide with a title bar and one diagram planted in a known region."""
    h, w = size
    img = np.full((h, w), 255, dtype=np.uint8)
    draw_rect(img, 20, 10, w - 20, 30, 0)  # title band
    diagram = box_and_arrow_diagram(seed=seed, size=(h // 2, w // 2))
    img[h // 4 : h // 4 + h // 2, w // 4 : w // 4 + w // 2] = diagram
    return img


def annotation_json(slide_id, h, w):
    return json.dumps(
        {
            "slide_id": slide_id,
            "regions": [
                {"class": "Title", "bbox": [20 / w, 10 / h, (w - 20) / w, 30 / h]},
                {"class": "Figure", "bbox": [0.25, 0.25, 0.75, 0.75]},
            ],
        }
    )


def write_annotations(tmp_path, slides, h, w):
    ann_dir = tmp_path / "ann"
    ann_dir.mkdir(exist_ok=True)
    paths = []
    for sid in slides:
        p = ann_dir / f"{sid}.layout.json"
        p.write_text(annotation_json(sid, h, w))
        paths.append(p)
    return paths


class TestBuildLoad:
    def test_round_trip(self, tmp_path):
        slides = {f"s{i}": slide_with_figure(i) for i in range(3)}
        paths = write_annotations(tmp_path, slides, 360, 640)
        out = tmp_path / "corpus"
        index = build_corpus(out, slides=slides, annotation_paths=paths)
        assert index["version"] == 1
        assert [e["slide_id"] for e in index["entries"]] == ["s0", "s1", "s2"]

        corpus = load_corpus(out)
        assert corpus.slide_ids == ["s0", "s1", "s2"]
        # One Figure region per slide -> one diagram each.
        assert corpus.diagram_ids == ["s0-0", "s1-0", "s2-0"]
        for did in corpus.diagram_ids:
            assert corpus.diagram_slide[did] == did.split("-")[0]
            assert len(corpus.diagram_features[did]) > 0
        for sid in corpus.slide_ids:
            classes = [r.cls for r in corpus.layouts[sid].regions]
            assert classes == [LayoutClass.TITLE, LayoutClass.FIGURE]

    def test_empty_corpus(self, tmp_path):
        out = tmp_path / "corpus"
        build_corpus(out, slides={})
        corpus = load_corpus(out)
        assert corpus.slide_ids == [] and corpus.diagram_ids == []

    def test_heuristic_fallback_without_annotations(self, tmp_path):
        slides = {"s0": slide_with_figure(1)}
        out = tmp_path / "corpus"
        build_corpus(out, slides=slides)
        corpus = load_corpus(out)
        assert corpus.slide_ids == ["s0"]
        assert (out / "layouts" / "s0.layout.json").exists()

    def test_build_from_frames_dedup(self, tmp_path):
        rng = np.random.default_rng(0)
        decks = [
            rng.integers(0, 256, (9, 16)).repeat(20, 0).repeat(20, 1).astype(np.uint8)
            for _ in range(3)
        ]
        frames = []
        for i, s in enumerate(decks):
            frames.extend((f"f{len(frames) + j:03d}", s) for j in range(10))
        index = build_corpus(tmp_path / "corpus", frames=frames)
        assert len(index["entries"]) == 3

    def test_unknown_annotation_rejected(self, tmp_path):
        slides = {"s0": slide_with_figure(1)}
        paths = write_annotations(tmp_path, ["s0", "ghost"], 180, 320)
        with pytest.raises(AnnotationMismatch):
            build_corpus(tmp_path / "corpus", slides=slides, annotation_paths=paths)


class TestRebuildDeterminism:
    def test_byte_identical_rebuild(self, tmp_path):
        slides = {f"s{i}": slide_with_figure(i + 5) for i in range(2)}
        paths = write_annotations(tmp_path, slides, 360, 640)
        out1, out2 = tmp_path / "c1", tmp_path / "c2"
        build_corpus(out1, slides=slides, annotation_paths=paths)
        build_corpus(out2, slides=slides, annotation_paths=paths)
        files1 = sorted(p.relative_to(out1) for p in out1.rglob("*") if p.is_file())
        files2 = sorted(p.relative_to(out2) for p in out2.rglob("*") if p.is_file())
        assert files1 == files2
        for rel in files1:
            assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes(), rel

    def test_deleted_cache_recomputed_equal(self, tmp_path):
        slides = {"s0": slide_with_figure(3)}
        paths = write_annotations(tmp_path, slides, 360, 640)
        out = tmp_path / "corpus"
        build_corpus(out, slides=slides, annotation_paths=paths)
        with_cache = load_corpus(out)
        (out / "features" / "s0-0.sgfd").unlink()
        recomputed = load_corpus(out)
        a = with_cache.diagram_features["s0-0"]
        b = recomputed.diagram_features["s0-0"]
        assert (a.pos == b.pos).all()
        assert (a.desc == b.desc).all()
        assert (a.angle == b.angle).all()


class TestLoadValidation:
    def build_one(self, tmp_path):
        slides = {"s0": slide_with_figure(2)}
        paths = write_annotations(tmp_path, slides, 360, 640)
        out = tmp_path / "corpus"
        build_corpus(out, slides=slides, annotation_paths=paths)
        return out

    def test_missing_index(self, tmp_path):
        with pytest.raises(MissingArtifact):
            load_corpus(tmp_path / "nope")

    def test_corrupt_index_json(self, tmp_path):
        out = self.build_one(tmp_path)
        (out / "index.json").write_text("{not json")
        with pytest.raises(CorruptIndex):
            load_corpus(out)

    def test_wrong_version(self, tmp_path):
        out = self.build_one(tmp_path)
        index = json.loads((out / "index.json").read_text())
        index["version"] = 99
        (out / "index.json").write_text(json.dumps(index))
        with pytest.raises(VersionMismatch):
            load_corpus(out)

    def test_missing_slide_png(self, tmp_path):
        out = self.build_one(tmp_path)
        (out / "slides" / "s0.png").unlink()
        with pytest.raises(MissingArtifact):
            load_corpus(out)

    def test_missing_diagram_mask(self, tmp_path):
        out = self.build_one(tmp_path)
        (out / "diagrams" / "s0-0.png").unlink()
        with pytest.raises(MissingArtifact):
            load_corpus(out)

    def test_cache_seed_mismatch(self, tmp_path):
        from slideguide.features import read_sgfd, write_sgfd

        out = self.build_one(tmp_path)
        cache = out / "features" / "s0-0.sgfd"
        ks, _ = read_sgfd(cache)
        write_sgfd(cache, ks, 12345)
        with pytest.raises(VersionMismatch):
            load_corpus(out)
