"""Seeded k-means with k-means++ starts, used for pseudo-context selection.

Squared-Euclidean objective, a fixed iteration cap, several restarts
keeping the lowest inertia, and deterministic tie-breaking (lowest index
wins) so clustering is reproducible bit for bit.
"""

from __future__ import annotations

import logging

import numpy as np

from .errors import ConfigError

logger = logging.getLogger(__name__)


def _plus_plus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    first = int(rng.integers(n))
    centers[0] = x[first]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with a center; lowest index wins
            idx = int(np.argmax(d2 == 0))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[c] = x[idx]
        d2 = np.minimum(d2, ((x - centers[c]) ** 2).sum(axis=1))
    return centers


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iters: int) -> tuple[np.ndarray, np.ndarray, float]:
    n, k = x.shape[0], centers.shape[0]
    assign = np.full(n, -1)
    for _ in range(max(1, max_iters)):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d2, axis=1)  # argmin takes the lowest index on ties
        counts = np.bincount(new_assign, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            # standard repair: re-seed from the point farthest from its
            # center, never stealing a cluster's only member
            order = np.argsort(-d2[np.arange(n), new_assign], kind="stable")
            far = next((int(i) for i in order if counts[new_assign[i]] > 1), None)
            if far is None:
                continue
            logger.info("k-means: re-seeding empty cluster %d from point %d", empty, far)
            counts[new_assign[far]] -= 1
            counts[empty] += 1
            centers[empty] = x[far]
            new_assign[far] = empty
            d2[far] = ((x[far] - centers) ** 2).sum(axis=1)
        if (new_assign == assign).all():
            break
        assign = new_assign
        for c in range(k):
            members = assign == c
            if members.any():
                centers[c] = x[members].mean(axis=0)
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    inertia = float(d2[np.arange(n), assign].sum())
    return centers, assign, inertia


def kmeans(
    x: np.ndarray,
    k: int,
    seed: int,
    max_iters: int = 100,
    restarts: int = 4,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Cluster rows of ``x``; returns (centers, assignment, inertia)."""
    x = np.asarray(x, dtype=np.float64)
    if k < 1 or k > x.shape[0]:
        raise ConfigError(f"k={k} infeasible for {x.shape[0]} points")
    best: tuple[np.ndarray, np.ndarray, float] | None = None
    rng = np.random.Generator(np.random.PCG64(seed))
    for _ in range(max(1, restarts)):
        centers = _plus_plus_init(x, k, rng)
        result = _lloyd(x, centers, max_iters)
        if best is None or result[2] < best[2]:
            best = result
    return best


def cluster_medoids(x: np.ndarray, centers: np.ndarray, assign: np.ndarray) -> np.ndarray:
    """One node per cluster: the member closest to the centroid, lowest
    index on ties; duplicate picks fall back to the next-closest node."""
    chosen: list[int] = []
    taken: set[int] = set()
    for c in range(centers.shape[0]):
        members = np.flatnonzero(assign == c)
        if members.size == 0:
            members = np.arange(x.shape[0])
        d2 = ((x[members] - centers[c]) ** 2).sum(axis=1)
        for idx in members[np.argsort(d2, kind="stable")]:
            if int(idx) not in taken:
                chosen.append(int(idx))
                taken.add(int(idx))
                break
    return np.array(sorted(chosen), dtype=np.int64)
