"""Sketch-to-diagram matching: brute-force 2-NN Hamming matching, the
distance-ratio test, per-pair cosine similarity of binary descriptors,
and the averaged similarity score S.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureConfig, KeypointSet, SamplingPattern, extract_features
from .raster import GrayImage

DEFAULT_RATIO = 0.75


@dataclass(frozen=True)
class MatchPair:
    i: int                     # index into the query keypoint set
    j: int                     # index into the candidate keypoint set
    dist_best: int
    dist_second: int | None    # absent when the candidate set has one entry

    def __post_init__(self):
        if self.dist_second is not None and self.dist_best > self.dist_second:
            raise ValueError("best distance exceeds second-best")


@dataclass(frozen=True)
class MatchResult:
    good: tuple[MatchPair, ...]
    sims: np.ndarray  # parallel to good
    S: float


@dataclass(frozen=True)
class MatcherConfig:
    ratio: float = DEFAULT_RATIO
    sim_floor: float | None = None

    def __post_init__(self):
        if not 0.0 < self.ratio <= 1.0:
            raise ValueError(f"ratio {self.ratio}")
        if self.sim_floor is not None and not 0.0 <= self.sim_floor <= 1.0:
            raise ValueError(f"sim_floor {self.sim_floor}")


@dataclass(frozen=True)
class DiagramHit:
    diagram_id: str
    S: float
    good_match_count: int


def _unpack_bits(desc: np.ndarray) -> np.ndarray:
    """Descriptor rows as float32 0/1 matrices (for BLAS-backed distances)."""
    return np.unpackbits(desc.reshape(desc.shape[0], -1), axis=1).astype(np.float32)


def _hamming_matrix(q: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Pairwise Hamming distances between packed descriptor rows.

    Computed as |q| + |c| - 2 q.c over unpacked 0/1 vectors: one matrix
    product instead of an elementwise popcount over the full cross
    product, which is what the per-sketch latency budget hinges on. All
    values are small integers, exact in float32.
    """
    qb = _unpack_bits(q)
    cb = _unpack_bits(c)
    dist = qb.sum(axis=1)[:, None] + cb.sum(axis=1)[None, :] - 2.0 * (qb @ cb.T)
    return np.rint(dist).astype(np.int64)


def _knn2_arrays(
    qdesc: np.ndarray, cdesc: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Best/second-best candidate per query descriptor.

    Returns (best_j, dist_best, dist_second) where dist_second is -1 when
    only one candidate exists. Distance ties go to the lower index.
    """
    nq, nc = qdesc.shape[0], cdesc.shape[0]
    if nq == 0 or nc == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z
    dist = _hamming_matrix(qdesc, cdesc)
    best_j = dist.argmin(axis=1)
    dist_best = dist[np.arange(nq), best_j]
    if nc == 1:
        return best_j, dist_best, np.full(nq, -1, dtype=np.int64)
    dist[np.arange(nq), best_j] = 257
    dist_second = dist.min(axis=1)
    return best_j, dist_best, dist_second


def knn2_match(q: KeypointSet, c: KeypointSet) -> list[MatchPair]:
    """Exhaustive 2-nearest-neighbor match of every query descriptor
    against all candidate descriptors (Hamming metric)."""
    best_j, dist_best, dist_second = _knn2_arrays(q.desc, c.desc)
    return [
        MatchPair(
            i=i,
            j=int(best_j[i]),
            dist_best=int(dist_best[i]),
            dist_second=None if dist_second[i] < 0 else int(dist_second[i]),
        )
        for i in range(len(best_j))
    ]


def ratio_filter(pairs: list[MatchPair], ratio: float = DEFAULT_RATIO) -> list[MatchPair]:
    """Keep pairs whose best distance beats ratio x second distance.

    Pairs with no second neighbor are dropped; order is preserved.
    """
    return [
        p
        for p in pairs
        if p.dist_second is not None and p.dist_best < ratio * p.dist_second
    ]


def cosine_sim(d1: np.ndarray, d2: np.ndarray) -> float:
    """Cosine similarity of two 256-bit descriptors viewed as 0/1 vectors:
    popcount(d1 & d2) / (sqrt(popcount(d1)) * sqrt(popcount(d2))), with 0
    when either descriptor has no set bits."""
    p1 = int(np.bitwise_count(d1).sum())
    p2 = int(np.bitwise_count(d2).sum())
    if p1 == 0 or p2 == 0:
        return 0.0
    inter = int(np.bitwise_count(d1 & d2).sum())
    # Cosine of 0/1 vectors lies in [0, 1]; clamp away float round-up so
    # near-duplicates can never outrank an exact match.
    return min(inter / (np.sqrt(p1) * np.sqrt(p2)), 1.0)


def _pair_cosines(
    qdesc: np.ndarray, cdesc: np.ndarray, qi: np.ndarray, cj: np.ndarray
) -> np.ndarray:
    """cosine_sim for index pairs, vectorized."""
    if qi.size == 0:
        return np.zeros(0, dtype=np.float64)
    dq = qdesc[qi]
    dc = cdesc[cj]
    pq = np.bitwise_count(dq).sum(axis=1).astype(np.float64)
    pc = np.bitwise_count(dc).sum(axis=1).astype(np.float64)
    inter = np.bitwise_count(dq & dc).sum(axis=1).astype(np.float64)
    denom = np.sqrt(pq) * np.sqrt(pc)
    sims = np.where(denom > 0.0, inter / np.maximum(denom, 1e-300), 0.0)
    return np.minimum(sims, 1.0)


def _score_arrays(
    qdesc: np.ndarray, cdesc: np.ndarray, cfg: MatcherConfig
) -> tuple[float, int, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized scoring core shared by image_similarity and retrieval.

    Returns (S, |M|, kept query idx, kept candidate idx, kept sims).
    """
    best_j, dist_best, dist_second = _knn2_arrays(qdesc, cdesc)
    keep = (dist_second >= 0) & (dist_best < cfg.ratio * dist_second)
    qi = np.nonzero(keep)[0]
    cj = best_j[qi]
    sims = _pair_cosines(qdesc, cdesc, qi, cj)
    if cfg.sim_floor is not None:
        above = sims > cfg.sim_floor
        qi, cj, sims = qi[above], cj[above], sims[above]
    s = float(sims.mean()) if sims.size else 0.0
    return s, int(sims.size), qi, cj, sims


def _as_keypoints(x, feature_config: FeatureConfig, pattern) -> KeypointSet:
    if isinstance(x, KeypointSet):
        return x
    return extract_features(x, feature_config, pattern)


def image_similarity(
    a: GrayImage | KeypointSet,
    b: GrayImage | KeypointSet,
    cfg: MatcherConfig = MatcherConfig(),
    feature_config: FeatureConfig = FeatureConfig(),
    pattern: SamplingPattern | None = None,
) -> MatchResult:
    """Similarity S between two images (or precomputed keypoint sets):
    mean cosine similarity over the ratio-test survivors, 0 when no good
    match remains."""
    ka = _as_keypoints(a, feature_config, pattern)
    kb = _as_keypoints(b, feature_config, pattern)
    s, _, qi, cj, sims = _score_arrays(ka.desc, kb.desc, cfg)
    best_j, dist_best, dist_second = _knn2_arrays(ka.desc, kb.desc)
    good = tuple(
        MatchPair(
            i=int(i),
            j=int(j),
            dist_best=int(dist_best[i]),
            dist_second=int(dist_second[i]),
        )
        for i, j in zip(qi, cj)
    )
    return MatchResult(good=good, sims=sims, S=s)


def retrieve_diagrams(
    sketch: GrayImage | KeypointSet,
    corpus,
    k: int,
    cfg: MatcherConfig = MatcherConfig(),
) -> list[DiagramHit]:
    """Score every corpus diagram against the sketch and return the top k.

    Ordered by S descending, then good-match count descending, then
    diagram_id ascending; the head entry is the shadow-guidance default.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    ks = _as_keypoints(sketch, corpus.feature_config, corpus.pattern)
    hits = []
    for diagram_id in sorted(corpus.diagram_features):
        s, count, _, _, _ = _score_arrays(
            ks.desc, corpus.diagram_features[diagram_id].desc, cfg
        )
        hits.append(DiagramHit(diagram_id=diagram_id, S=s, good_match_count=count))
    hits.sort(key=lambda h: (-h.S, -h.good_match_count, h.diagram_id))
    return hits[:k]
