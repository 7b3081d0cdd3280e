"""Font recognition: synthetic glyph data, a from-scratch convolutional
autoencoder with a classifier head, and training/inference entry points."""

from .data import (
    FONT_NAMES,
    IMAGE_H,
    IMAGE_W,
    N_CLASSES,
    GlyphImage,
    render_synthetic_dataset,
    render_word,
)
from .model import (
    FontModel,
    TrainConfig,
    stratified_split,
    cae_forward,
    classifier_forward,
    classify_font,
    evaluate,
    history_csv,
    load_model,
    save_model,
    train,
)

__all__ = [
    "FONT_NAMES",
    "IMAGE_H",
    "IMAGE_W",
    "N_CLASSES",
    "GlyphImage",
    "render_synthetic_dataset",
    "render_word",
    "stratified_split",
    "FontModel",
    "TrainConfig",
    "cae_forward",
    "classifier_forward",
    "classify_font",
    "evaluate",
    "history_csv",
    "load_model",
    "save_model",
    "train",
]
