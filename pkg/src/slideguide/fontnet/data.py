"""Synthetic labeled glyph images for font training.

Five visually distinct faces are derived from one embedded 5x7 bitmap
alphabet: sans (plain), serif (stem caps/feet), bold (horizontal
dilation), condensed (narrow aspect), slanted (per-row shear). Each
sample renders a random word with positional and brightness jitter.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

GLYPH_H, GLYPH_W = 7, 5
IMAGE_H, IMAGE_W = 32, 96
N_CLASSES = 5
FONT_NAMES = ("sans", "serif", "bold", "condensed", "slanted")

# Classic 5x7 uppercase bitmap alphabet; '#' is ink.
_ALPHABET = {
    "A": (" ### ", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"),
    "B": ("#### ", "#   #", "#   #", "#### ", "#   #", "#   #", "#### "),
    "C": (" ### ", "#   #", "#    ", "#    ", "#    ", "#   #", " ### "),
    "D": ("#### ", "#   #", "#   #", "#   #", "#   #", "#   #", "#### "),
    "E": ("#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#####"),
    "F": ("#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#    "),
    "G": (" ### ", "#   #", "#    ", "# ###", "#   #", "#   #", " ### "),
    "H": ("#   #", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"),
    "I": (" ### ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "),
    "J": ("  ###", "   # ", "   # ", "   # ", "   # ", "#  # ", " ##  "),
    "K": ("#   #", "#  # ", "# #  ", "##   ", "# #  ", "#  # ", "#   #"),
    "L": ("#    ", "#    ", "#    ", "#    ", "#    ", "#    ", "#####"),
    "M": ("#   #", "## ##", "# # #", "# # #", "#   #", "#   #", "#   #"),
    "N": ("#   #", "##  #", "# # #", "#  ##", "#   #", "#   #", "#   #"),
    "O": (" ### ", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "),
    "P": ("#### ", "#   #", "#   #", "#### ", "#    ", "#    ", "#    "),
    "Q": (" ### ", "#   #", "#   #", "#   #", "# # #", "#  # ", " ## #"),
    "R": ("#### ", "#   #", "#   #", "#### ", "# #  ", "#  # ", "#   #"),
    "S": (" ####", "#    ", "#    ", " ### ", "    #", "    #", "#### "),
    "T": ("#####", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  "),
    "U": ("#   #", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "),
    "V": ("#   #", "#   #", "#   #", "#   #", "#   #", " # # ", "  #  "),
    "W": ("#   #", "#   #", "#   #", "# # #", "# # #", "## ##", "#   #"),
    "X": ("#   #", "#   #", " # # ", "  #  ", " # # ", "#   #", "#   #"),
    "Y": ("#   #", "#   #", " # # ", "  #  ", "  #  ", "  #  ", "  #  "),
    "Z": ("#####", "    #", "   # ", "  #  ", " #   ", "#    ", "#####"),
}


@dataclass(frozen=True)
class GlyphImage:
    """One training sample: (H, W) float64 luminance in [0, 1] plus the
    font class index (0-4)."""

    pixels: np.ndarray
    label: int


def _glyph(ch: str) -> np.ndarray:
    rows = _ALPHABET[ch]
    return np.array([[c == "#" for c in row] for row in rows], dtype=bool)


def _serif(g: np.ndarray) -> np.ndarray:
    """Add caps and feet to vertical stems touching the glyph edges."""
    out = g.copy()
    for col in range(GLYPH_W):
        for row in (0, GLYPH_H - 1):
            inner = row + 1 if row == 0 else row - 1
            if g[row, col] and g[inner, col]:
                if col > 0:
                    out[row, col - 1] = True
                if col < GLYPH_W - 1:
                    out[row, col + 1] = True
    return out


def _bold(g: np.ndarray) -> np.ndarray:
    out = g.copy()
    out[:, 1:] |= g[:, :-1]
    return out


def _scale(g: np.ndarray, sy: int, sx: int) -> np.ndarray:
    return g.repeat(sy, axis=0).repeat(sx, axis=1)


def _slant(g: np.ndarray) -> np.ndarray:
    """Shear a scaled glyph one pixel right per two rows."""
    h, w = g.shape
    shift = (h - 1 - np.arange(h)) // 2
    out = np.zeros((h, w + int(shift.max())), dtype=bool)
    for r in range(h):
        out[r, shift[r] : shift[r] + w] = g[r]
    return out


def _render_glyph(ch: str, font: int) -> np.ndarray:
    g = _glyph(ch)
    if font == 0:
        return _scale(g, 3, 3)
    if font == 1:
        return _scale(_serif(g), 3, 3)
    if font == 2:
        return _scale(_bold(g), 3, 3)
    if font == 3:
        return _scale(g, 3, 2)
    if font == 4:
        return _slant(_scale(g, 3, 3))
    raise ValueError(f"font index {font}")


def render_word(word: str, font: int) -> np.ndarray:
    """Ink mask of a word in the given face, glyphs separated by 3 px."""
    glyphs = [_render_glyph(ch, font) for ch in word.upper()]
    h = max(g.shape[0] for g in glyphs)
    widths = [g.shape[1] for g in glyphs]
    canvas = np.zeros((h, sum(widths) + 3 * (len(glyphs) - 1)), dtype=bool)
    x = 0
    for g in glyphs:
        canvas[: g.shape[0], x : x + g.shape[1]] = g
        x += g.shape[1] + 3
    return canvas


def render_synthetic_dataset(per_font: int, seed: int = 0) -> list[GlyphImage]:
    """Balanced dataset: ``per_font`` random words per face, with ±4 px
    horizontal offset and ±10% brightness jitter; deterministic under
    ``seed``."""
    if per_font < 1:
        raise ValueError("per_font must be >= 1")
    rng = np.random.default_rng(seed)
    letters = np.array(list(string.ascii_uppercase))
    out = []
    for i in range(per_font):
        for font in range(N_CLASSES):
            length = int(rng.integers(4, 11))
            word = "".join(rng.choice(letters, size=length))
            mask = render_word(word, font)
            img = np.ones((IMAGE_H, IMAGE_W), dtype=np.float64)
            x0 = 4 + int(rng.integers(-4, 5))
            y0 = (IMAGE_H - mask.shape[0]) // 2
            w = min(mask.shape[1], IMAGE_W - x0)
            img[y0 : y0 + mask.shape[0], x0 : x0 + w][mask[:, :w]] = 0.0
            brightness = 1.0 + 0.1 * float(rng.uniform(-1.0, 1.0))
            img = np.clip(img * brightness, 0.0, 1.0)
            out.append(GlyphImage(pixels=img, label=font))
    return out
