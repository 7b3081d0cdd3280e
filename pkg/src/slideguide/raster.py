"""Grayscale raster primitives.

Images are plain numpy arrays: a ``GrayImage`` is a 2-D uint8 array of
luminance values (row-major, y down) and a ``BinImage`` is a 2-D bool array
where True marks ink. A ``Hash64`` is a Python int holding 64 bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import DecodeError, InvalidDimensions

GrayImage = np.ndarray  # (H, W) uint8
BinImage = np.ndarray   # (H, W) bool
Hash64 = int

# ITU-R 601 luma weights for color-to-gray conversion.
_LUMA = np.array([0.299, 0.587, 0.114])


def load_image(path) -> GrayImage:
    """Load a PNG or PGM file as a grayscale image.

    Color inputs are reduced to luminance with ITU-R 601 weights, rounded
    to the nearest integer.

    Raises:
        FileNotFoundError: no file at ``path``.
        DecodeError: file exists but cannot be decoded.
    """
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("L", "I;16", "1"):
                arr = np.asarray(im.convert("L"), dtype=np.uint8)
            else:
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
                arr = np.rint(rgb @ _LUMA).clip(0, 255).astype(np.uint8)
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    return arr


def save_image(img: GrayImage, path) -> None:
    """Write a grayscale image as PNG or PGM (chosen by extension)."""
    Image.fromarray(np.asarray(img, dtype=np.uint8), mode="L").save(path)


def resize_bilinear(img: GrayImage, w: int, h: int) -> GrayImage:
    """Resize with bilinear interpolation and pixel-center alignment.

    Raises:
        InvalidDimensions: target width or height is zero.
    """
    if w < 1 or h < 1:
        raise InvalidDimensions(f"target size {w}x{h}")
    src_h, src_w = img.shape
    if (src_w, src_h) == (w, h):
        return img.copy()

    # Pixel-center mapping: dst center i+0.5 -> src coordinate, clamped.
    xs = (np.arange(w) + 0.5) * (src_w / w) - 0.5
    ys = (np.arange(h) + 0.5) * (src_h / h) - 0.5
    xs = np.clip(xs, 0.0, src_w - 1.0)
    ys = np.clip(ys, 0.0, src_h - 1.0)

    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, src_w - 1)
    y1 = np.minimum(y0 + 1, src_h - 1)
    fx = xs - x0
    fy = ys - y0

    p = img.astype(np.float64)
    top = p[y0][:, x0] * (1 - fx) + p[y0][:, x1] * fx
    bot = p[y1][:, x0] * (1 - fx) + p[y1][:, x1] * fx
    out = top * (1 - fy)[:, None] + bot * fy[:, None]
    return np.rint(out).clip(0, 255).astype(np.uint8)


def dhash(img: GrayImage) -> Hash64:
    """64-bit difference hash: 9x8 downsample, horizontal comparisons.

    Bit ``r*8 + c`` is set iff pixel (r, c+1) is strictly brighter than
    pixel (r, c) in the downsampled image.
    """
    small = resize_bilinear(img, 9, 8)
    bits = small[:, 1:] > small[:, :-1]
    h = 0
    for i, b in enumerate(bits.ravel()):
        if b:
            h |= 1 << i
    return h


def hamming(a: Hash64, b: Hash64) -> int:
    """Number of differing bits between two 64-bit hashes."""
    return (a ^ b).bit_count()


def otsu_threshold(img: GrayImage) -> int:
    """Otsu's threshold over the 256-bin histogram.

    Returns the smallest t in [0, 255] maximizing the between-class
    variance of the split {<= t} vs {> t}. A single-level histogram
    returns 255 (everything in the low class).
    """
    hist = np.bincount(img.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    if np.count_nonzero(hist) <= 1:
        return 255

    w0 = np.cumsum(hist)
    sum0 = np.cumsum(hist * np.arange(256))
    w1 = total - w0
    mu0 = np.divide(sum0, w0, out=np.zeros(256), where=w0 > 0)
    mu1 = np.divide(sum0[-1] - sum0, w1, out=np.zeros(256), where=w1 > 0)
    between = w0 * w1 * (mu0 - mu1) ** 2
    return int(np.argmax(between))


def binarize_otsu(img: GrayImage, polarity: str = "ink-darker") -> BinImage:
    """Binarize with a global Otsu threshold.

    ``polarity`` selects which side of the threshold counts as ink:
    "ink-darker" marks pixels <= t, "ink-lighter" marks pixels > t.
    A single-level image yields an all-zero mask regardless of polarity.
    """
    if polarity not in ("ink-darker", "ink-lighter"):
        raise ValueError(f"unknown polarity {polarity!r}")
    hist_levels = np.unique(img)
    if hist_levels.size <= 1:
        return np.zeros(img.shape, dtype=bool)
    t = otsu_threshold(img)
    if polarity == "ink-darker":
        return img <= t
    return img > t


@dataclass(frozen=True)
class Component:
    """One connected component: tight bbox (x0, y0 inclusive, x1, y1
    exclusive) and ink pixel count."""

    bbox: tuple[int, int, int, int]
    area: int


_STRUCT8 = np.ones((3, 3), dtype=bool)


def connected_components(mask: BinImage) -> list[Component]:
    """8-connected components of the ink pixels, in raster order of each
    component's first pixel."""
    labels, n = ndimage.label(mask, structure=_STRUCT8)
    out = []
    for i, sl in enumerate(ndimage.find_objects(labels), start=1):
        ys, xs = sl
        area = int(np.sum(labels[sl] == i))
        out.append(Component(bbox=(xs.start, ys.start, xs.stop, ys.stop), area=area))
    return out
