"""Base clustering primitives.

``kmeans`` is k-means++ seeding followed by Lloyd iterations, repeated over
independent restarts; it stands in for an approximate k-means solver with
no certified approximation factor.  ``hierarchical_complete`` is
complete-linkage agglomeration that records the diameter of each newly
formed cluster as its merge height.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ._backend import get_kernels
from .errors import InputError
from .types import Assignment, Dendrogram, as_matrix

__all__ = [
    "KMeansResult",
    "kmeans",
    "hierarchical_complete",
    "cut_dendrogram",
    "pairwise_distances",
]


@dataclass(frozen=True)
class KMeansResult:
    assignment: Assignment
    centers: np.ndarray
    objective: float
    iterations: int
    restarts_used: int
    history: Tuple[float, ...]


def _plusplus(x, k, rng):
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:  # every point coincides with a chosen center
            idx = rng.integers(n)
        centers[c] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centers[c]) ** 2, axis=1))
    return centers


def _repair_empty(x, labels, d2, k):
    """Give each empty cluster the point farthest from its current center,
    taken from a cluster that keeps at least one member."""
    counts = np.bincount(labels, minlength=k)
    for c in np.flatnonzero(counts == 0):
        movable = counts[labels] > 1
        cand = np.where(movable, d2, -1.0)
        i = int(np.argmax(cand))
        counts[labels[i]] -= 1
        labels[i] = c
        counts[c] = 1
        d2[i] = 0.0
    return labels


def _lloyd(x, k, max_iter, rng, kern):
    centers = _plusplus(x, k, rng)
    labels = None
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        new, d2 = kern.assign_nearest(x, centers)
        new = _repair_empty(x, new, d2, k)
        sizes = np.bincount(new, minlength=k)
        centers = np.zeros_like(centers)
        np.add.at(centers, new, x)
        centers /= sizes[:, None]
        obj = float(np.sum((x - centers[new]) ** 2))
        history.append(obj)
        if labels is not None and np.array_equal(new, labels):
            labels = new
            break
        labels = new
    return labels, centers, history, it


def kmeans(x, k: int, restarts: int = 10, max_iter: int = 300, seed: int = 0) -> KMeansResult:
    """k-means++ seeded Lloyd iterations, best objective over restarts.

    Restart ``r`` draws from its own generator spawned off
    ``SeedSequence(seed)``, so results do not depend on evaluation order.
    Ties in both the nearest-center step and the best-restart choice go to
    the lowest index.
    """
    x = as_matrix(x, "x")
    n = x.shape[0]
    k = int(k)
    if not 1 <= k <= n:
        raise InputError(f"k={k} must lie in [1, n={n}]")
    if restarts < 1:
        raise InputError("restarts must be >= 1")
    if max_iter < 1:
        raise InputError("max_iter must be >= 1")
    kern = get_kernels()
    streams = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    for ss in streams:
        labels, centers, history, it = _lloyd(x, k, max_iter, np.random.default_rng(ss), kern)
        if best is None or history[-1] < best[2][-1]:
            best = (labels, centers, history, it)
    labels, centers, history, it = best
    return KMeansResult(
        assignment=Assignment(labels, k),
        centers=centers,
        objective=history[-1],
        iterations=it,
        restarts_used=restarts,
        history=tuple(history),
    )


def pairwise_distances(x) -> np.ndarray:
    """Dense Euclidean distance matrix between rows."""
    x = as_matrix(x, "x")
    if x.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(x, metric="euclidean"))


def hierarchical_complete(x, backend=None) -> Dendrogram:
    """Complete-linkage agglomerative clustering of the rows of ``x``.

    The pair of clusters with the smallest maximum cross distance is merged
    at each step; ties go to the lexicographically smallest pair, where a
    cluster is identified by its smallest member index.  The height of
    step ``t`` is the diameter of the cluster it creates.

    Parameters
    ----------
    x : array_like, shape (n, d)
        Points to cluster, ``n >= 2``.
    backend : {"cython", "python"}, optional
        Force a kernel implementation; defaults to the active one.
    """
    x = as_matrix(x, "x")
    n = x.shape[0]
    if n < 2:
        raise InputError("hierarchical clustering needs at least 2 points")
    slot_i, slot_j, _, diam = get_kernels(backend).complete_linkage(pairwise_distances(x))
    # map slots to SciPy-style cluster ids: leaves 0..n-1, merge t gets n + t
    ident = np.arange(n)
    left = np.empty(n - 1, dtype=np.int64)
    right = np.empty(n - 1, dtype=np.int64)
    for t, (i, j) in enumerate(zip(slot_i, slot_j)):
        left[t], right[t] = ident[i], ident[j]
        ident[i] = n + t
    return Dendrogram(n=n, left=left, right=right, new_id=np.arange(n, 2 * n - 1), heights=diam)


def cut_dendrogram(d: Dendrogram, k: int) -> Assignment:
    """Partition after the first ``n - k`` merges, labels in first-appearance order."""
    n = d.n
    k = int(k)
    if not 1 <= k <= n:
        raise InputError(f"k={k} must lie in [1, n={n}]")
    parent = np.arange(2 * n - 1)
    for t in range(n - k):
        parent[d.left[t]] = d.new_id[t]
        parent[d.right[t]] = d.new_id[t]
    root = np.arange(n)
    # follow parents to the top of the truncated forest
    while True:
        nxt = parent[root]
        if np.array_equal(nxt, root):
            break
        root = nxt
    return Assignment.from_labels(root)
