"""Keypoint pipeline for diagrams and sketches.

FAST-9 corners on a radius-3 ring, intensity-centroid orientation, and
256-bit rotated binary descriptors sampled from a seeded 31x31 pattern.
Single scale: inputs are normalized to max dimension 512 first.

Descriptor bit i lives at byte i >> 3, bit i & 7 (little-endian bit order).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ImageTooSmall, VersionMismatch
from .raster import GrayImage, resize_bilinear

PATCH_RADIUS = 15
RING_RADIUS = 3
BORDER_MARGIN = PATCH_RADIUS + RING_RADIUS
MAX_IMAGE_DIM = 512
DEFAULT_PATTERN_SEED = 0x5EED
DESCRIPTOR_BITS = 256
DESCRIPTOR_BYTES = DESCRIPTOR_BITS // 8

# 16-pixel Bresenham circle of radius 3, clockwise from (0, -3); y down.
RING_OFFSETS = (
    (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)
ARC_LENGTH = 9


@dataclass(frozen=True)
class Keypoint:
    x: int
    y: int
    angle: float = 0.0
    score: float = 0.0


@dataclass(frozen=True)
class KeypointSet:
    """Parallel keypoint/descriptor arrays for one image."""

    pos: np.ndarray     # (N, 2) float32, columns x, y
    angle: np.ndarray   # (N,) float32, radians
    score: np.ndarray   # (N,) float32
    desc: np.ndarray    # (N, 32) uint8
    source_dims: tuple[int, int]  # (width, height) of the normalized image

    def __len__(self) -> int:
        return self.pos.shape[0]

    @staticmethod
    def empty(dims: tuple[int, int]) -> "KeypointSet":
        return KeypointSet(
            pos=np.zeros((0, 2), np.float32),
            angle=np.zeros(0, np.float32),
            score=np.zeros(0, np.float32),
            desc=np.zeros((0, DESCRIPTOR_BYTES), np.uint8),
            source_dims=dims,
        )


@dataclass(frozen=True)
class SamplingPattern:
    """256 (p, q) offset pairs inside the radius-15 patch disc."""

    seed: int
    p: np.ndarray  # (256, 2) int64, columns dx, dy
    q: np.ndarray  # (256, 2) int64

    @staticmethod
    def generate(seed: int = DEFAULT_PATTERN_SEED) -> "SamplingPattern":
        rng = np.random.default_rng(seed)
        pts = []
        while len(pts) < 2 * DESCRIPTOR_BITS:
            dx, dy = rng.integers(-PATCH_RADIUS, PATCH_RADIUS + 1, size=2)
            if dx * dx + dy * dy <= PATCH_RADIUS * PATCH_RADIUS:
                pts.append((int(dx), int(dy)))
        arr = np.array(pts, dtype=np.int64)
        return SamplingPattern(seed=seed, p=arr[:DESCRIPTOR_BITS], q=arr[DESCRIPTOR_BITS:])


@dataclass(frozen=True)
class FeatureConfig:
    t: int = 20
    max_keypoints: int = 500
    seed: int = DEFAULT_PATTERN_SEED


def fast_corner_candidates(img: GrayImage, t: int) -> list[Keypoint]:
    """Raw FAST-9 corners, before non-maximum suppression.

    A pixel is a corner when at least 9 contiguous ring pixels are all
    brighter than center + t or all darker than center - t. The score is
    the sum of |ring - center| over the qualifying polarity's ring pixels.
    Corners inside the 18 px border margin are never reported. Results
    are in raster order.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    h, w = img.shape
    if h < 7 or w < 7:
        raise ImageTooSmall(f"{w}x{h} below 7x7")
    m = BORDER_MARGIN
    if h <= 2 * m or w <= 2 * m:
        return []

    center = img[m : h - m, m : w - m].astype(np.int16)
    ring = np.empty((16,) + center.shape, dtype=np.int16)
    for s, (dx, dy) in enumerate(RING_OFFSETS):
        ring[s] = img[m + dy : h - m + dy, m + dx : w - m + dx]

    bright = ring > center + t
    dark = ring < center - t
    is_bright = _has_arc(bright)
    is_dark = _has_arc(dark)
    corner = is_bright | is_dark
    if not corner.any():
        return []

    absdiff = np.abs(ring - center)
    score_bright = np.where(is_bright, (absdiff * bright).sum(axis=0), 0)
    score_dark = np.where(is_dark, (absdiff * dark).sum(axis=0), 0)
    score = np.maximum(score_bright, score_dark).astype(np.float64)

    ys, xs = np.nonzero(corner)
    return [
        Keypoint(x=int(x + m), y=int(y + m), score=float(score[y, x]))
        for y, x in zip(ys, xs)
    ]


def detect_fast(img: GrayImage, t: int) -> list[Keypoint]:
    """FAST-9 corners with greedy 3x3 non-maximum suppression (strongest
    score wins; ties by raster order)."""
    raw = fast_corner_candidates(img, t)
    cands = sorted(((k.score, k.y, k.x) for k in raw), key=lambda c: (-c[0], c[1], c[2]))
    kept: list[Keypoint] = []
    occupied = set()
    for s_, y, x in cands:
        if any((y + dy, x + dx) in occupied for dy in (-1, 0, 1) for dx in (-1, 0, 1)):
            continue
        occupied.add((y, x))
        kept.append(Keypoint(x=int(x), y=int(y), score=float(s_)))
    kept.sort(key=lambda k: (k.y, k.x))
    return kept


def _has_arc(flags: np.ndarray) -> np.ndarray:
    """True where any 9 contiguous of the 16 ring flags hold (wrapping)."""
    wrapped = np.concatenate([flags, flags[: ARC_LENGTH - 1]], axis=0)
    out = np.zeros(flags.shape[1:], dtype=bool)
    for s in range(16):
        out |= wrapped[s : s + ARC_LENGTH].all(axis=0)
    return out


_disc_cache: dict[int, np.ndarray] = {}


def _disc_offsets(radius: int) -> np.ndarray:
    if radius not in _disc_cache:
        r = np.arange(-radius, radius + 1)
        dx, dy = np.meshgrid(r, r)
        keep = dx * dx + dy * dy <= radius * radius
        _disc_cache[radius] = np.stack([dx[keep], dy[keep]], axis=1)
    return _disc_cache[radius]


def orientation_ic(img: GrayImage, kp: Keypoint, radius: int = PATCH_RADIUS) -> float:
    """Intensity-centroid angle: atan2 of the patch's first moments
    (y down), 0 when both moments vanish."""
    offs = _disc_offsets(radius)
    vals = img[kp.y + offs[:, 1], kp.x + offs[:, 0]].astype(np.int64)
    m10 = int((offs[:, 0] * vals).sum())
    m01 = int((offs[:, 1] * vals).sum())
    if m10 == 0 and m01 == 0:
        return 0.0
    return float(np.arctan2(m01, m10))


def brief_descriptor(
    img: GrayImage, kp: Keypoint, pattern: SamplingPattern
) -> np.ndarray:
    """256-bit descriptor: rotate the pattern by the keypoint angle
    (offsets rounded to pixels), bit i = 1 iff I(p_i') < I(q_i')."""
    c, s = np.cos(kp.angle), np.sin(kp.angle)

    def sample(pts: np.ndarray) -> np.ndarray:
        rx = np.rint(pts[:, 0] * c - pts[:, 1] * s).astype(np.intp) + kp.x
        ry = np.rint(pts[:, 0] * s + pts[:, 1] * c).astype(np.intp) + kp.y
        return img[ry, rx].astype(np.int16)

    bits = (sample(pattern.p) < sample(pattern.q)).astype(np.uint8)
    return np.packbits(bits, bitorder="little")


def box_blur3(img: GrayImage) -> GrayImage:
    """3x3 box blur with edge replication, rounded to nearest integer."""
    p = np.pad(img, 1, mode="edge").astype(np.int32)
    total = sum(
        p[1 + dy : p.shape[0] - 1 + dy, 1 + dx : p.shape[1] - 1 + dx]
        for dy in (-1, 0, 1)
        for dx in (-1, 0, 1)
    )
    return np.rint(total / 9.0).astype(np.uint8)


def normalize_size(img: GrayImage) -> GrayImage:
    """Scale so the longer side is at most MAX_IMAGE_DIM."""
    h, w = img.shape
    longest = max(h, w)
    if longest <= MAX_IMAGE_DIM:
        return img
    scale = MAX_IMAGE_DIM / longest
    return resize_bilinear(img, max(1, round(w * scale)), max(1, round(h * scale)))


def extract_features(
    img: GrayImage,
    config: FeatureConfig = FeatureConfig(),
    pattern: SamplingPattern | None = None,
) -> KeypointSet:
    """Full pipeline: normalize, blur, detect, orient, describe.

    Deterministic given the config; a featureless image yields an empty
    KeypointSet.
    """
    if pattern is None:
        pattern = SamplingPattern.generate(config.seed)
    img = normalize_size(np.asarray(img, dtype=np.uint8))
    h, w = img.shape
    if h < 7 or w < 7:
        return KeypointSet.empty((w, h))
    blurred = box_blur3(img)
    kps = detect_fast(blurred, config.t)
    if not kps:
        return KeypointSet.empty((w, h))
    kps = sorted(kps, key=lambda k: (-k.score, k.y, k.x))[: config.max_keypoints]
    kps.sort(key=lambda k: (k.y, k.x))

    oriented = [
        Keypoint(x=k.x, y=k.y, angle=orientation_ic(blurred, k), score=k.score)
        for k in kps
    ]
    desc = np.stack([brief_descriptor(blurred, k, pattern) for k in oriented])
    return KeypointSet(
        pos=np.array([[k.x, k.y] for k in oriented], dtype=np.float32),
        angle=np.array([k.angle for k in oriented], dtype=np.float32),
        score=np.array([k.score for k in oriented], dtype=np.float32),
        desc=desc,
        source_dims=(w, h),
    )


_SGFD_MAGIC = b"SGFD"
_SGFD_VERSION = 1


def write_sgfd(path, ks: KeypointSet, pattern_seed: int) -> None:
    """Descriptor cache: magic, version u16, pattern seed u64, count u32,
    then per keypoint x, y, angle, score (f32) + 32 descriptor bytes;
    little-endian."""
    with open(path, "wb") as f:
        f.write(_SGFD_MAGIC)
        f.write(struct.pack("<HQI", _SGFD_VERSION, pattern_seed, len(ks)))
        for i in range(len(ks)):
            f.write(
                struct.pack(
                    "<ffff",
                    float(ks.pos[i, 0]),
                    float(ks.pos[i, 1]),
                    float(ks.angle[i]),
                    float(ks.score[i]),
                )
            )
            f.write(ks.desc[i].tobytes())


def read_sgfd(path, source_dims: tuple[int, int] = (0, 0)) -> tuple[KeypointSet, int]:
    """Read a descriptor cache; returns (keypoint set, pattern seed)."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != _SGFD_MAGIC:
        raise VersionMismatch(f"{path}: bad magic")
    version, seed, count = struct.unpack_from("<HQI", data, 4)
    if version != _SGFD_VERSION:
        raise VersionMismatch(f"{path}: version {version}")
    off = 4 + 14
    rec = 16 + DESCRIPTOR_BYTES
    if len(data) != off + count * rec:
        raise VersionMismatch(f"{path}: truncated")
    pos = np.zeros((count, 2), np.float32)
    angle = np.zeros(count, np.float32)
    score = np.zeros(count, np.float32)
    desc = np.zeros((count, DESCRIPTOR_BYTES), np.uint8)
    for i in range(count):
        x, y, a, s = struct.unpack_from("<ffff", data, off)
        pos[i] = (x, y)
        angle[i] = a
        score[i] = s
        desc[i] = np.frombuffer(data, np.uint8, DESCRIPTOR_BYTES, off + 16)
        off += rec
    return (
        KeypointSet(pos=pos, angle=angle, score=score, desc=desc, source_dims=source_dims),
        int(seed),
    )
