"""End-to-end acceptance checks.

Each test prints one [PASS]/[FAIL] line for its criterion so a full run
doubles as a checklist. Tolerances are asserted exactly as stated in the
criterion text; timing-sensitive checks measure wall-clock time on the
machine running the suite.
"""

import time

import numpy as np
import pytest

from slideguide.corpus_store import Corpus, build_corpus
from slideguide.features import (
    FeatureConfig,
    KeypointSet,
    extract_features,
    fast_corner_candidates,
)
from slideguide.fontnet import nn as fnn
from slideguide.fontnet import (
    FontModel,
    TrainConfig,
    cae_forward,
    classifier_forward,
    evaluate,
    render_synthetic_dataset,
    train,
)
from slideguide.ingest import LayoutClass, LayoutRegion, SlideLayout, extract_slides
from slideguide.layout import CHANNELS, heatmap, layout_feature, retrieve_layouts
from slideguide.matching import (
    MatcherConfig,
    MatchPair,
    cosine_sim,
    image_similarity,
    knn2_match,
    ratio_filter,
    retrieve_diagrams,
)
from slideguide.raster import connected_components, dhash
from tests.conftest import box_and_arrow_diagram
from tests.test_corpus import annotation_json, slide_with_figure
from tests.test_features import fast_corners_oracle
from tests.test_fontnet import conv2d_oracle, tiny_model
from tests.test_matching import hamming_bytes, kp_set, random_desc
from tests.test_raster import dhash_oracle, flood_fill_components


def report(capsys, name, ok, detail=""):
    with capsys.disabled():
        tag = "PASS" if ok else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        print(f"[{tag}] {name}{suffix}")
    assert ok, f"{name}: {detail}"


class TestAcceptance:
    def test_empty_match_rule(self, capsys):
        blank = np.full((100, 100), 255, np.uint8)
        result = image_similarity(blank, box_and_arrow_diagram(seed=1))
        ok = result.S == 0.0 and len(result.good) == 0
        report(capsys, "empty match set yields S = 0 exactly", ok, f"S={result.S}")

    def test_ratio_boundary_and_monotonicity(self, capsys):
        kept = ratio_filter([MatchPair(0, 0, 10, 20)], 0.75)
        dropped = ratio_filter([MatchPair(0, 0, 16, 20)], 0.75)
        ok = len(kept) == 1 and len(dropped) == 0

        rng = np.random.default_rng(42)
        for _ in range(1000):
            n = int(rng.integers(1, 20))
            bests = rng.integers(0, 257, n)
            seconds = bests + rng.integers(0, 257 - bests)
            pairs = [
                MatchPair(i, 0, int(b), int(s))
                for i, (b, s) in enumerate(zip(bests, seconds))
            ]
            r_lo, r_hi = sorted(rng.uniform(0.05, 1.0, 2))
            lo = {p.i for p in ratio_filter(pairs, r_lo)}
            hi = {p.i for p in ratio_filter(pairs, r_hi)}
            if not lo <= hi:
                ok = False
                break
        report(
            capsys,
            "ratio test: (10,20) kept / (16,20) dropped at 0.75; "
            "monotone over 1000 random sets",
            ok,
        )

    def test_oracle_equivalence_suite(self, capsys):
        t0 = time.monotonic()
        rng = np.random.default_rng(7)
        ok = True
        detail = ""

        for _ in range(50):  # dhash
            img = rng.integers(0, 256, rng.integers(9, 80, 2), dtype=np.uint8)
            if dhash(img) != dhash_oracle(img):
                ok, detail = False, "dhash"
        for _ in range(50):  # connected components
            mask = rng.random((30, 40)) < 0.35
            got = {(c.bbox, c.area) for c in connected_components(mask)}
            want = {(c.bbox, c.area) for c in flood_fill_components(mask)}
            if got != want:
                ok, detail = False, "connected_components"
        for _ in range(50):  # FAST corner candidates
            img = rng.integers(0, 256, (44, 44), dtype=np.uint8)
            t = int(rng.integers(5, 40))
            got = {(k.x, k.y) for k in fast_corner_candidates(img, t)}
            if got != fast_corners_oracle(img, t):
                ok, detail = False, "fast"
        for _ in range(50):  # 2-NN matching
            q = random_desc(rng, 40)
            c = random_desc(rng, 50)
            for p in knn2_match(kp_set(q), kp_set(c)):
                dists = [hamming_bytes(q[p.i], c[j]) for j in range(50)]
                best = min(range(50), key=lambda j: (dists[j], j))
                second = min(d for j, d in enumerate(dists) if j != best)
                if p.j != best or p.dist_best != dists[best] or p.dist_second != second:
                    ok, detail = False, "knn2_match"
        for _ in range(50):  # binary cosine
            d1, d2 = random_desc(rng, 2)
            v1 = np.unpackbits(d1, bitorder="little").astype(float)
            v2 = np.unpackbits(d2, bitorder="little").astype(float)
            want = float(v1 @ v2 / (np.linalg.norm(v1) * np.linalg.norm(v2)))
            if abs(cosine_sim(d1, d2) - want) > 1e-10:
                ok, detail = False, "cosine_sim"
        for _ in range(50):  # small-kernel convolution
            k = int(rng.choice([3, 5]))
            conv = fnn.Conv2D(1, 2, k=k, pad=k // 2, rng=rng, dtype=np.float64)
            x = rng.normal(size=(1, 1, 7, 9))
            if np.abs(conv.forward(x) - conv2d_oracle(x, conv.w, conv.b, k, k // 2)).max() > 1e-10:
                ok, detail = False, "conv2d"

        elapsed = time.monotonic() - t0
        if elapsed >= 60:
            ok, detail = False, f"{elapsed:.1f}s"
        report(
            capsys,
            "oracle equivalence: dhash / components / FAST / knn2 / cosine / conv, "
            "50 instances each under 60 s",
            ok,
            detail or f"{elapsed:.1f}s",
        )

    def test_self_retrieval_30_diagrams(self, capsys):
        sets = {}
        seed = 0
        while len(sets) < 30:
            ks = extract_features(
                box_and_arrow_diagram(seed=seed, size=(200, 260), n_boxes=3)
            )
            seed += 1
            if len(ks) == 0:
                continue
            sets[f"d{len(sets):02d}"] = ks
        corpus = Corpus.from_parts({}, diagram_features=sets)
        ok = True
        for did, ks in sets.items():
            hits = retrieve_diagrams(ks, corpus, 30)
            if hits[0].diagram_id != did or hits[0].S != 1.0:
                ok = False
                break
        report(
            capsys,
            "self-retrieval: all 30 corpus diagrams rank themselves first with S = 1.0",
            ok,
        )

    def test_heatmap_conservation(self, capsys):
        from tests.test_layout import random_layout

        rng = np.random.default_rng(3)
        ok = True
        for _ in range(10):
            layouts = [random_layout(rng, f"s{i}") for i in range(25)]
            total = heatmap(layouts, None, 16, 9).counts
            by_class = sum(heatmap(layouts, c, 16, 9).counts for c in CHANNELS)
            if not (total == by_class).all():
                ok = False
        empty = heatmap([], None, 16, 9)
        ok = ok and not empty.intensities.any()
        report(
            capsys,
            "heat-map conservation: all-class counts = sum of per-class counts; "
            "empty corpus all-zero",
            ok,
        )

    def test_slide_extraction_five_slides(self, capsys):
        rng = np.random.default_rng(5)
        frames = []
        for _ in range(5):
            base = (
                rng.integers(0, 256, (9, 16)).repeat(10, axis=0).repeat(10, axis=1)
            ).astype(np.uint8)
            for _ in range(30):
                frame = base.copy()
                ys = rng.integers(0, 90, 30)
                xs = rng.integers(0, 160, 30)
                frame[ys, xs] = rng.integers(0, 256, 30)
                frames.append(frame)
        extracted = extract_slides(frames, threshold=10)
        ok = len(extracted) == 5 and [e.frame_index for e in extracted] == [
            0, 30, 60, 90, 120,
        ]
        report(
            capsys,
            "slide extraction: 5x30 noisy frame deck yields exactly 5 slides "
            "at threshold 10",
            ok,
            f"got {len(extracted)}",
        )

    def test_gradient_check_and_initial_ce(self, capsys):
        rng = np.random.default_rng(11)
        model = tiny_model(dropout_p=0.0, dtype=np.float64)
        x = rng.random((3, 1, 8, 8))
        y = np.array([1, 3, 0])

        def loss():
            latent, recon = cae_forward(x, model, train=True)
            logits = classifier_forward(latent, model, train=True)
            mse, dmse = fnn.mse_loss(recon, x)
            ce, dce = fnn.cross_entropy_loss(logits, y)
            return mse + ce, dmse, dce

        fnn.zero_grads(model.all_layers)
        _, dmse, dce = loss()
        dlatent = fnn.run_backward(model.decoder, dmse)
        dlatent = dlatent + fnn.run_backward(model.classifier, dce)
        fnn.run_backward(model.encoder, dlatent)

        eps = 1e-4
        ok = True
        worst = 0.0
        for layer in model.all_layers:
            grads = layer.grads()
            for name, p in layer.params().items():
                if name not in grads:
                    continue
                g = grads[name]
                for fi in range(p.size):
                    idx = np.unravel_index(fi, p.shape)
                    orig = p[idx]
                    p[idx] = orig + eps
                    up = loss()[0]
                    p[idx] = orig - eps
                    down = loss()[0]
                    p[idx] = orig
                    numeric = (up - down) / (2 * eps)
                    rel = abs(numeric - g[idx]) / max(abs(numeric), abs(g[idx]), 1e-8)
                    worst = max(worst, rel)
                    if rel > 1e-4:
                        ok = False

        # Zero-initialized head: uniform logits before any training step.
        ce_model = tiny_model(dropout_p=0.0, dtype=np.float64, seed=4)
        latent, _ = cae_forward(x, ce_model)
        ce0, _ = fnn.cross_entropy_loss(classifier_forward(latent, ce_model), y)
        ok = ok and abs(ce0 - np.log(5)) <= 1e-9
        report(
            capsys,
            "gradient check: every parameter within 1e-4 of central differences; "
            "initial CE = ln 5 +/- 1e-9",
            ok,
            f"worst rel err {worst:.2e}, |CE-ln5|={abs(ce0 - np.log(5)):.2e}",
        )

    @pytest.mark.slow
    def test_font_validation_accuracy(self, capsys):
        t0 = time.monotonic()
        dataset = render_synthetic_dataset(500, seed=0)
        model, history = train(dataset, TrainConfig())
        elapsed = time.monotonic() - t0
        best = max(h.val_accuracy for h in history)
        ok = best >= 0.90 and elapsed < 600
        report(
            capsys,
            "font recognition: validation accuracy >= 0.90 on 500/font "
            "within 10 min CPU",
            ok,
            f"best val acc {best:.4f} in {elapsed:.0f}s",
        )

    def test_retrieval_latency(self, capsys):
        from tests.test_layout import random_layout

        rng = np.random.default_rng(9)
        layouts = {f"s{i:04d}": random_layout(rng, f"s{i:04d}") for i in range(1000)}
        layout_corpus = Corpus.from_parts(layouts)
        query = random_layout(rng, "q")
        retrieve_layouts(query, layout_corpus, 9)  # warm up
        t0 = time.monotonic()
        retrieve_layouts(query, layout_corpus, 9)
        layout_s = time.monotonic() - t0

        sets = {
            f"d{i:04d}": kp_set(random_desc(rng, 300)) for i in range(500)
        }
        diagram_corpus = Corpus.from_parts({}, diagram_features=sets)
        sketch = kp_set(random_desc(rng, 500))
        retrieve_diagrams(sketch, diagram_corpus, 6)  # warm up
        t0 = time.monotonic()
        retrieve_diagrams(sketch, diagram_corpus, 6)
        diagram_s = time.monotonic() - t0

        ok = layout_s <= 1.02 and diagram_s <= 1.33
        report(
            capsys,
            "latency: layout query over 1000 slides <= 1.02 s; diagram query "
            "over 500 diagrams <= 1.33 s",
            ok,
            f"layout {layout_s * 1000:.1f} ms, diagram {diagram_s * 1000:.1f} ms",
        )

    def test_determinism(self, capsys, tmp_path):
        slides = {f"s{i}": slide_with_figure(i + 20) for i in range(3)}
        ann = tmp_path / "ann"
        ann.mkdir()
        paths = []
        for sid in slides:
            p = ann / f"{sid}.layout.json"
            p.write_text(annotation_json(sid, 360, 640))
            paths.append(p)
        out1, out2 = tmp_path / "c1", tmp_path / "c2"
        build_corpus(out1, slides=slides, annotation_paths=paths)
        build_corpus(out2, slides=slides, annotation_paths=paths)
        files1 = sorted(p.relative_to(out1) for p in out1.rglob("*") if p.is_file())
        files2 = sorted(p.relative_to(out2) for p in out2.rglob("*") if p.is_file())
        ok = files1 == files2 and all(
            (out1 / rel).read_bytes() == (out2 / rel).read_bytes() for rel in files1
        )

        from slideguide.corpus_store import load_corpus

        c1, c2 = load_corpus(out1), load_corpus(out2)
        sketch = box_and_arrow_diagram(seed=55)
        ok = ok and retrieve_diagrams(sketch, c1, 5) == retrieve_diagrams(sketch, c2, 5)
        query = SlideLayout(
            "q", (LayoutRegion(cls=LayoutClass.FIGURE, bbox=(0.2, 0.2, 0.8, 0.8)),)
        )
        ok = ok and retrieve_layouts(query, c1, 5) == retrieve_layouts(query, c2, 5)
        report(
            capsys,
            "determinism: rebuilt corpora byte-identical; repeated retrievals "
            "identical",
            ok,
        )
