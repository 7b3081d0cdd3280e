"""HTTP endpoints exercised in-process over a small disk corpus."""

import base64
import io
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from slideguide.corpus_store import build_corpus, load_corpus
from slideguide.fontnet import (
    IMAGE_H,
    IMAGE_W,
    FontModel,
    TrainConfig,
    render_synthetic_dataset,
    render_word,
    train,
)
from slideguide.layout import heatmap_for_sketch, retrieve_layouts
from slideguide.matching import retrieve_diagrams
from slideguide.service import ServiceConfig, create_app
from tests.conftest import box_and_arrow_diagram, draw_rect
from tests.test_corpus import annotation_json, slide_with_figure


def png_b64(img):
    buf = io.BytesIO()
    Image.fromarray(img).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode()


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("svc")
    slides = {f"s{i}": slide_with_figure(i) for i in range(4)}
    ann_dir = root / "ann"
    ann_dir.mkdir()
    paths = []
    for sid in slides:
        p = ann_dir / f"{sid}.layout.json"
        p.write_text(annotation_json(sid, 360, 640))
        paths.append(p)
    out = root / "corpus"
    build_corpus(out, slides=slides, annotation_paths=paths)
    return load_corpus(out)


@pytest.fixture(scope="module")
def font_model():
    ds = render_synthetic_dataset(20, seed=11)
    model, _ = train(
        ds,
        TrainConfig(epochs=6, batch_size=16, lr=0.05, seed=3),
        model=FontModel.create(
            input_hw=(IMAGE_H, IMAGE_W), enc_channels=(8, 16), hidden=32, seed=0
        ),
    )
    return model


@pytest.fixture(scope="module")
def client(corpus, font_model):
    return TestClient(create_app(corpus, font_model))


class TestHealth:
    def test_healthz(self, client, corpus):
        body = client.get("/healthz").json()
        assert body == {
            "status": "ok",
            "slides": len(corpus.slide_ids),
            "diagrams": len(corpus.diagram_features),
        }


class TestLayoutEndpoint:
    def test_matches_library_call(self, client, corpus):
        regions = [
            {"class": "Title", "bbox": [0.05, 0.02, 0.95, 0.1]},
            {"class": "Figure", "bbox": [0.25, 0.25, 0.75, 0.75]},
        ]
        body = client.post("/retrieve/layout", json={"regions": regions, "k": 4}).json()
        from slideguide.service import _parse_regions

        direct = retrieve_layouts(_parse_regions(regions), corpus, 4)
        assert [e["slide_id"] for e in body["entries"]] == [
            e.slide_id for e in direct.entries
        ]
        for got, want in zip(body["entries"], direct.entries):
            assert got["score"] == pytest.approx(want.score)
            assert got["url"] == f"/slide/{want.slide_id}.png"
        assert body["elapsed_ms"] >= 0

    def test_empty_regions_zero_scores(self, client):
        body = client.post("/retrieve/layout", json={"regions": [], "k": 3}).json()
        assert len(body["entries"]) == 3
        assert all(e["score"] == 0.0 for e in body["entries"])

    def test_bad_region_class(self, client):
        resp = client.post(
            "/retrieve/layout",
            json={"regions": [{"class": "banner", "bbox": [0, 0, 1, 1]}]},
        )
        assert resp.status_code == 422


class TestHeatmapEndpoint:
    def test_whole_corpus_parity(self, client, corpus):
        body = client.post("/heatmap", json={"class": "all"}).json()
        hm = heatmap_for_sketch(None, corpus, None)
        assert body["grid_w"] == corpus.grid_w
        assert body["grid_h"] == corpus.grid_h
        got = np.array(body["intensities"])
        assert got.shape == hm.intensities.shape
        np.testing.assert_allclose(got, hm.intensities)

    def test_class_filter_accepted(self, client):
        for name in ("title", "Text", "FIGURE"):
            assert client.post("/heatmap", json={"class": name}).status_code == 200

    def test_unknown_class_rejected(self, client):
        assert client.post("/heatmap", json={"class": "margin"}).status_code == 422


class TestDiagramEndpoint:
    def test_self_sketch_first_with_shadow_default(self, client, corpus):
        # Post corpus diagram s1-0's own mask as a sketch: it must rank
        # first and be flagged as the shadow default.
        mask_png = (corpus.root / "diagrams" / "s1-0.png").read_bytes()
        b64 = base64.b64encode(mask_png).decode()
        body = client.post(
            "/retrieve/diagram", json={"sketch_png_base64": b64, "k": 4}
        ).json()
        assert body["entries"][0]["diagram_id"] == "s1-0"
        assert body["entries"][0]["score"] == 1.0
        assert body["entries"][0]["shadow_default"] is True
        assert all(not e["shadow_default"] for e in body["entries"][1:])

    def test_matches_library_call(self, client, corpus):
        sketch = box_and_arrow_diagram(seed=77)
        body = client.post(
            "/retrieve/diagram", json={"sketch_png_base64": png_b64(sketch), "k": 4}
        ).json()
        direct = retrieve_diagrams(sketch, corpus, 4)
        assert [e["diagram_id"] for e in body["entries"]] == [
            h.diagram_id for h in direct
        ]
        for got, want in zip(body["entries"], direct):
            assert got["score"] == pytest.approx(want.S)
            assert got["good_match_count"] == want.good_match_count

    def test_garbage_payload(self, client):
        resp = client.post("/retrieve/diagram", json={"sketch_png_base64": "@@@"})
        assert resp.status_code == 422

    def test_png_fetch_round_trip(self, client, corpus):
        resp = client.get("/diagram/s0-0.png")
        assert resp.status_code == 200
        img = np.asarray(Image.open(io.BytesIO(resp.content)))
        assert img.shape == (180, 320)
        assert client.get("/diagram/nope.png").status_code == 404
        assert client.get("/slide/s0.png").status_code == 200
        assert client.get("/slide/nope.png").status_code == 404


class TestFontEndpoint:
    def crop(self, word="SAMPLE", font=1):
        mask = render_word(word, font)
        img = np.full((IMAGE_H, IMAGE_W), 255, dtype=np.uint8)
        h, w = mask.shape
        img[4 : 4 + h, 4 : 4 + min(w, IMAGE_W - 4)][mask[:, : IMAGE_W - 4]] = 0
        return img

    def test_classify(self, client):
        body = client.post(
            "/font/classify", json={"crop_png_base64": png_b64(self.crop())}
        ).json()
        assert 0 <= body["label"] <= 4
        assert isinstance(body["font_name"], str)
        assert 0.2 <= body["confidence"] <= 1.0

    def test_empty_crop(self, client):
        blank = np.full((40, 120), 255, np.uint8)
        resp = client.post("/font/classify", json={"crop_png_base64": png_b64(blank)})
        assert resp.status_code == 422
        assert resp.json()["detail"] == "empty_glyph"

    def test_no_model_503(self, corpus):
        bare = TestClient(create_app(corpus, font_model=None))
        resp = bare.post(
            "/font/classify", json={"crop_png_base64": png_b64(self.crop())}
        )
        assert resp.status_code == 503
