"""Core value types.

All containers are frozen dataclasses around numpy arrays.  Arrays are
copied and marked read-only on construction so that values can be shared
between threads without defensive copying.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from .errors import InputError

__all__ = [
    "Assignment",
    "Embedding",
    "SelectorMatrix",
    "Spectrum",
    "SvdResult",
    "Dendrogram",
    "as_matrix",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate and convert ``m`` to a 2-D float64 C-contiguous array."""
    a = np.ascontiguousarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise InputError(f"{name} must have at least one row and column, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class Assignment:
    """Hard partition of ``n`` items into ``k`` nonempty clusters.

    Parameters
    ----------
    labels : array_like of int
        Cluster index of each item, values in ``[0, k)``.
    k : int, optional
        Number of clusters; defaults to ``max(labels) + 1``.
    """

    labels: np.ndarray
    k: int = -1

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.size == 0:
            raise InputError("labels must be a nonempty 1-D sequence")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise InputError("labels must be integers")
        labels = labels.astype(np.int64)
        k = int(self.k) if self.k is not None and self.k >= 0 else int(labels.max()) + 1
        if labels.min() < 0 or labels.max() >= k:
            raise InputError(f"labels must lie in [0, {k})")
        counts = np.bincount(labels, minlength=k)
        if np.any(counts == 0):
            empty = np.flatnonzero(counts == 0).tolist()
            raise InputError(f"clusters {empty} are empty")
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "k", k)

    @classmethod
    def from_labels(cls, labels) -> "Assignment":
        """Build an assignment after renumbering labels by first appearance."""
        return cls(relabel_first_appearance(labels))

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def matrix(self) -> np.ndarray:
        """The ``n x k`` 0/1 clustering matrix."""
        z = np.zeros((self.n, self.k))
        z[np.arange(self.n), self.labels] = 1.0
        return z

    def __len__(self) -> int:
        return self.n


def relabel_first_appearance(labels) -> np.ndarray:
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank[inverse.reshape(-1)].astype(np.int64)


@dataclass(frozen=True)
class Embedding:
    """An ``n x K`` real matrix, usually with orthonormal columns.

    ``residual`` is ``||M^T M - I||_F``; it is computed, never supplied.
    """

    matrix: np.ndarray
    residual: float = field(init=False)

    def __post_init__(self):
        m = as_matrix(self.matrix, "embedding")
        object.__setattr__(self, "matrix", _frozen(m))
        gram = m.T @ m
        res = float(np.linalg.norm(gram - np.eye(m.shape[1])))
        object.__setattr__(self, "residual", res)

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def k(self) -> int:
        return int(self.matrix.shape[1])


@dataclass(frozen=True)
class SelectorMatrix:
    """Columns of the identity retained at the nonzero columns of a matrix."""

    source_cols: int
    kept: Tuple[int, ...]

    def __post_init__(self):
        kept = tuple(int(i) for i in self.kept)
        if any(b <= a for a, b in zip(kept, kept[1:])):
            raise InputError("kept indices must be strictly increasing")
        if kept and (kept[0] < 0 or kept[-1] >= self.source_cols):
            raise InputError("kept index out of range")
        object.__setattr__(self, "kept", kept)

    @property
    def k(self) -> int:
        return len(self.kept)

    def matrix(self) -> np.ndarray:
        h = np.zeros((self.source_cols, self.k))
        h[list(self.kept), np.arange(self.k)] = 1.0
        return h


@dataclass(frozen=True)
class Spectrum:
    """Descending nonnegative singular values."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.size == 0:
            raise InputError("spectrum must be nonempty")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InputError("spectrum values must be finite and nonnegative")
        if np.any(np.diff(v) > 1e-12 * max(1.0, float(v[0]))):
            raise InputError("spectrum values must be sorted in descending order")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def gaps(self) -> np.ndarray:
        return self.values[:-1] - self.values[1:]

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class SvdResult:
    left: Embedding
    values: Spectrum
    right: np.ndarray

    def __post_init__(self):
        if self.left.k != self.right.shape[1] or self.left.k != len(self.values):
            raise InputError("left/right/values dimensions disagree")

    @property
    def k(self) -> int:
        return self.left.k


@dataclass(frozen=True)
class Dendrogram:
    """Merge record of an agglomerative run over ``n`` items.

    Row ``t - 2`` of each array describes step ``t`` (``t = 2..n``): the
    two merged cluster ids, the id of the new cluster (``n + t - 2``) and
    the merge height ``h(t)``.  Leaves have ids ``0..n-1``.
    """

    n: int
    left: np.ndarray
    right: np.ndarray
    new_id: np.ndarray
    heights: np.ndarray

    def __post_init__(self):
        m = self.n - 1
        arrays = {}
        for name in ("left", "right", "new_id", "heights"):
            a = np.asarray(getattr(self, name))
            if a.shape != (m,):
                raise InputError(f"dendrogram field {name} must have length n - 1 = {m}")
            arrays[name] = a
        for name in ("left", "right", "new_id"):
            object.__setattr__(self, name, _frozen(arrays[name].astype(np.int64)))
        object.__setattr__(self, "heights", _frozen(arrays["heights"].astype(np.float64)))

    @property
    def steps(self) -> np.ndarray:
        return np.arange(2, self.n + 1)

    def records(self) -> Sequence[Tuple[int, int, int, int, float]]:
        return [
            (int(t), int(i), int(j), int(c), float(h))
            for t, i, j, c, h in zip(self.steps, self.left, self.right, self.new_id, self.heights)
        ]

    def to_linkage(self) -> np.ndarray:
        """SciPy-style linkage matrix ``(i, j, height, size)``."""
        size = np.ones(2 * self.n - 1)
        out = np.empty((self.n - 1, 4))
        for r, (i, j, c, h) in enumerate(zip(self.left, self.right, self.new_id, self.heights)):
            size[c] = size[i] + size[j]
            out[r] = (i, j, h, size[c])
        return out
