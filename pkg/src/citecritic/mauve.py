"""Distribution-similarity score over embedded texts.

Both text sets are embedded, jointly quantized with seeded k-means, and
reduced to smoothed cluster histograms p (model) and q (reference). For
each mixture r = lam*p + (1-lam)*q on a grid of lam values, the pair
(exp(-c*KL(q||r)), exp(-c*KL(p||r))) traces a divergence curve; the score
is the area under that curve, 1.0 for identical distributions and near 0
for disjoint ones.

k-means is hand-rolled: the joint set routinely contains exact duplicate
points (texts repeat across iterations), and the quantizer must tolerate
degenerate clusters deterministically rather than reject them.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .text import tokenize


class Embedder(Protocol):
    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Rows of embeddings, one per text, all the same dimension."""
        ...


class HashEmbedder:
    """Deterministic stub: each token hashes to a fixed 16-dim vector and a
    text embeds as the L2-normalized sum over its token multiset."""

    def __init__(self, seed: int = 0, dim: int = 16) -> None:
        if dim < 1 or dim > 32:
            raise ValueError("dim must be in 1..32 (one sha256 digest)")
        self.seed = seed
        self.dim = dim
        self._cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._cache.get(token)
        if cached is None:
            digest = hashlib.sha256(f"{self.seed}:{token}".encode()).digest()
            cached = np.frombuffer(digest[: self.dim], dtype=np.uint8) / 127.5 - 1.0
            self._cache[token] = cached
        return cached

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            for token in tokenize(text):
                out[i] += self._token_vector(token)
            norm = float(np.linalg.norm(out[i]))
            if norm > 0:
                out[i] /= norm
        return out


def kmeans(points: np.ndarray, k: int, seed: int, iters: int = 50) -> np.ndarray:
    """Cluster assignment for each row of ``points``; k-means++ seeding and
    Lloyd updates, deterministic given ``seed``. Duplicate points and empty
    clusters are handled by reseeding a dead centroid on the point farthest
    from its current centroid."""
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    rng = np.random.default_rng(seed)

    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    dist2 = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = float(dist2.sum())
        if total <= 0.0:
            centroids[j] = points[rng.integers(n)]
        else:
            centroids[j] = points[rng.choice(n, p=dist2 / total)]
        dist2 = np.minimum(dist2, np.sum((points - centroids[j]) ** 2, axis=1))

    assign = np.zeros(n, dtype=int)
    for _ in range(iters):
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d2, axis=1)
        for j in range(k):
            members = points[new_assign == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
            else:
                farthest = int(np.argmax(d2[np.arange(n), new_assign]))
                centroids[j] = points[farthest]
                new_assign[farthest] = j
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return assign


@dataclass(frozen=True)
class MauveConfig:
    k_clusters: int = 16  # cap; effective k = min(cap, n_joint // 2)
    c_scale: float = 5.0
    lambda_points: int = 25
    epsilon: float = 1e-6
    seed: int = 0


def _kl(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum(a * np.log(a / b)))


def mauve_score(
    model_texts: Sequence[str],
    reference_texts: Sequence[str],
    embedder: Embedder,
    config: MauveConfig = MauveConfig(),
) -> float:
    """Area under the divergence curve between the two text sets, in [0, 1]."""
    if len(model_texts) < 2 or len(reference_texts) < 2:
        raise ValueError("mauve_score needs at least 2 texts on each side")
    emb_model = np.asarray(embedder.embed(list(model_texts)), dtype=float)
    emb_ref = np.asarray(embedder.embed(list(reference_texts)), dtype=float)
    if emb_model.shape[1] != emb_ref.shape[1]:
        raise ValueError("embedding dimensions differ between sides")
    joint = np.vstack([emb_model, emb_ref])
    k = max(1, min(config.k_clusters, joint.shape[0] // 2))
    assign = kmeans(joint, k, seed=config.seed)

    n_model = emb_model.shape[0]
    counts_p = np.bincount(assign[:n_model], minlength=k).astype(float)
    counts_q = np.bincount(assign[n_model:], minlength=k).astype(float)
    p = (counts_p + config.epsilon) / (counts_p.sum() + k * config.epsilon)
    q = (counts_q + config.epsilon) / (counts_q.sum() + k * config.epsilon)

    # interior grid points plus the two axis extremes to close the curve
    lambdas = np.linspace(0.0, 1.0, config.lambda_points + 2)[1:-1]
    xs, ys = [0.0, 1.0], [1.0, 0.0]
    for lam in lambdas:
        r = lam * p + (1.0 - lam) * q
        xs.append(float(np.exp(-config.c_scale * _kl(q, r))))
        ys.append(float(np.exp(-config.c_scale * _kl(p, r))))
    # ascending x; at ties the higher y comes first so the closing extreme
    # (1, 0) cannot cut the curve short of a coincident (1, 1) point
    order = np.lexsort((-np.asarray(ys), np.asarray(xs)))
    xs_arr = np.asarray(xs)[order]
    ys_arr = np.asarray(ys)[order]
    area = float(np.sum((xs_arr[1:] - xs_arr[:-1]) * (ys_arr[1:] + ys_arr[:-1]) / 2.0))
    return min(1.0, max(0.0, area))
