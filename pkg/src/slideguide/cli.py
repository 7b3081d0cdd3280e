"""Command-line interface: corpus building, heat maps, matching,
retrieval, font training/classification, and the HTTP server."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import corpus_store, fontnet
from .errors import SlideGuideError
from .features import FeatureConfig
from .ingest import LayoutClass
from .layout import heatmap, render_heatmap
from .matching import MatcherConfig, image_similarity, retrieve_diagrams
from .raster import load_image, save_image


@click.group()
def main():
    """Sketch-based slide design guidance engine."""


def _annotation_paths(annotations_dir: str | None):
    if annotations_dir is None:
        return ()
    return sorted(Path(annotations_dir).glob("*.layout.json"))


@main.command()
@click.option("--frames", "frames_dir", type=click.Path(exists=True), default=None,
              help="Directory of ordered frame images to deduplicate.")
@click.option("--slides", "slides_dir", type=click.Path(exists=True), default=None,
              help="Directory of already-extracted slide images.")
@click.option("--annotations", "annotations_dir", type=click.Path(exists=True),
              default=None, help="Directory of .layout.json files.")
@click.option("--corpus", "corpus_dir", type=click.Path(), required=True)
@click.option("--hash-threshold", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=FeatureConfig().seed, show_default=True)
def ingest(frames_dir, slides_dir, annotations_dir, corpus_dir, hash_threshold, seed):
    """Build a corpus from frames or slides."""
    if (frames_dir is None) == (slides_dir is None):
        raise click.UsageError("provide exactly one of --frames or --slides")
    config = corpus_store.CorpusConfig(
        hash_threshold=hash_threshold,
        feature_config=FeatureConfig(seed=seed),
    )
    try:
        if slides_dir is not None:
            slides = {
                p.stem: load_image(p)
                for p in sorted(Path(slides_dir).glob("*.png"))
                + sorted(Path(slides_dir).glob("*.pgm"))
            }
            index = corpus_store.build_corpus(
                corpus_dir, slides=slides,
                annotation_paths=_annotation_paths(annotations_dir), config=config,
            )
        else:
            frames = [
                (p.stem, load_image(p))
                for p in sorted(Path(frames_dir).glob("*.png"))
                + sorted(Path(frames_dir).glob("*.pgm"))
            ]
            index = corpus_store.build_corpus(
                corpus_dir, frames=frames,
                annotation_paths=_annotation_paths(annotations_dir), config=config,
            )
    except SlideGuideError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(
        f"corpus built: {len(index['entries'])} slides, "
        f"{len(index['diagrams'])} diagrams"
    )


@main.command("heatmap")
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--class", "cls", default="all", show_default=True,
              type=click.Choice(["title", "text", "figure", "all"]))
@click.option("--out", "out_path", type=click.Path(), default=None)
def heatmap_cmd(corpus_dir, cls, out_path):
    """Render the corpus heat map for one layout class (or all)."""
    try:
        corpus = corpus_store.load_corpus(corpus_dir)
    except SlideGuideError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    class_filter = None if cls == "all" else LayoutClass(cls)
    hm = heatmap(
        [corpus.layouts[sid] for sid in corpus.slide_ids],
        class_filter,
        corpus.grid_w,
        corpus.grid_h,
    )
    if out_path:
        save_image(render_heatmap(hm), out_path)
        click.echo(f"wrote {out_path}")
    else:
        click.echo(f"max cell count: {int(hm.counts.max())}")


@main.command()
@click.argument("image_a", type=click.Path(exists=True))
@click.argument("image_b", type=click.Path(exists=True))
@click.option("--ratio", type=float, default=0.75, show_default=True)
def match(image_a, image_b, ratio):
    """Similarity score S between two images."""
    try:
        result = image_similarity(
            load_image(image_a), load_image(image_b), MatcherConfig(ratio=ratio)
        )
    except SlideGuideError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"S={result.S:.6f} good_matches={len(result.good)}")


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--sketch", "sketch_path", type=click.Path(exists=True), required=True)
@click.option("-k", type=int, default=6, show_default=True)
def retrieve(corpus_dir, sketch_path, k):
    """Rank corpus diagrams against a sketch."""
    try:
        corpus = corpus_store.load_corpus(corpus_dir)
        hits = retrieve_diagrams(load_image(sketch_path), corpus, k)
    except SlideGuideError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    for hit in hits:
        click.echo(
            f"{hit.diagram_id}\tS={hit.S:.6f}\tmatches={hit.good_match_count}"
        )


@main.group()
def font():
    """Font model training and classification."""


@font.command("train")
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--per-font", type=int, default=500, show_default=True)
@click.option("--epochs", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def font_train(corpus_dir, per_font, epochs, seed):
    """Train the font model on synthetic glyphs; store it in the corpus."""
    dataset = fontnet.render_synthetic_dataset(per_font, seed)
    cfg = fontnet.TrainConfig(epochs=epochs, seed=seed)
    try:
        model, history = fontnet.train(dataset, cfg)
    except SlideGuideError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    fonts_dir = Path(corpus_dir) / "fonts"
    fonts_dir.mkdir(parents=True, exist_ok=True)
    fontnet.save_model(fonts_dir / "model.sgfm", model)
    (fonts_dir / "training_log.csv").write_text(fontnet.history_csv(history))
    best = max((h.val_accuracy for h in history), default=0.0)
    click.echo(f"model saved; best val accuracy {best:.4f}")


@font.command("classify")
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--crop", "crop_path", type=click.Path(exists=True), required=True)
def font_classify(corpus_dir, crop_path):
    """Classify the font of a text crop using the corpus's trained model."""
    model_path = Path(corpus_dir) / "fonts" / "model.sgfm"
    if not model_path.exists():
        click.echo("error: no trained font model in corpus", err=True)
        sys.exit(2)
    try:
        model = fontnet.load_model(model_path)
        label, name, confidence = fontnet.classify_font(load_image(crop_path), model)
    except SlideGuideError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"label={label} font={name} confidence={confidence:.4f}")


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(corpus_dir, port, host):
    """Run the HTTP retrieval service."""
    import uvicorn

    from .service import ServiceConfig, create_app

    try:
        corpus = corpus_store.load_corpus(corpus_dir)
    except SlideGuideError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    model_path = Path(corpus_dir) / "fonts" / "model.sgfm"
    model = fontnet.load_model(model_path) if model_path.exists() else None
    app = create_app(corpus, model, ServiceConfig(corpus_dir=str(corpus_dir), port=port))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
