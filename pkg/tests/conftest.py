import numpy as np
import pytest


def draw_rect(img, x0, y0, x1, y1, value=0, thickness=2):
    """Draw an axis-aligned rectangle outline onto a uint8 image."""
    img[y0 : y0 + thickness, x0:x1] = value
    img[y1 - thickness : y1, x0:x1] = value
    img[y0:y1, x0 : x0 + thickness] = value
    img[y0:y1, x1 - thickness : x1] = value
    return img


def draw_line(img, x0, y0, x1, y1, value=0):
    """Bresenham line segment."""
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx, sy = (1 if x0 < x1 else -1), (1 if y0 < y1 else -1)
    err = dx + dy
    x, y = x0, y0
    while True:
        img[y, x] = value
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy
    return img


def box_and_arrow_diagram(seed=0, size=(160, 220), n_boxes=3):
    """A synthetic flow diagram: boxes joined by lines, white background."""
    rng = np.random.default_rng(seed)
    h, w = size
    img = np.full(size, 255, dtype=np.uint8)
    centers = []
    for i in range(n_boxes):
        bw = int(rng.integers(30, 50))
        bh = int(rng.integers(20, 34))
        x0 = int(rng.integers(24, w - 24 - bw))
        y0 = 24 + i * (h - 48 - bh) // max(1, n_boxes - 1)
        draw_rect(img, x0, y0, x0 + bw, y0 + bh)
        centers.append((x0 + bw // 2, y0 + bh // 2))
    for (xa, ya), (xb, yb) in zip(centers, centers[1:]):
        draw_line(img, xa, ya, xb, yb)
    return img


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
