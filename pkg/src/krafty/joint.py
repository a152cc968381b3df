"""Joint clustering across views.

KRAFTY embeds the items through the transposed Khatri-Rao product of the
per-view clustering matrices (or singular-vector matrices), so that every
joint cluster owns its own direction.  MASE concatenates the per-view
matrices side by side instead, which caps the rank at the sum of the
per-view cluster counts.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .clustering import Dendrogram, cut_dendrogram, hierarchical_complete, kmeans
from .errors import InputError, RankWarning
from .linalg import numerical_rank, regularize, singular_values, svd_k, tkr_multi
from .selectk import ElbowEstimate, largest_gap, profile_likelihood_elbow
from .types import Assignment, Embedding, Spectrum

__all__ = [
    "AssignmentView",
    "EmbeddingView",
    "ViewInput",
    "ProjectionMatrix",
    "JointResult",
    "project_assignment",
    "joint_matrix_krafty",
    "joint_matrix_mase",
    "krafty",
    "mase",
    "RANK_RTOL",
    "ORTHONORMAL_TOL",
]

RANK_RTOL = 1e-8
ORTHONORMAL_TOL = 1e-6


@dataclass(frozen=True)
class AssignmentView:
    assignment: Assignment

    @property
    def n(self) -> int:
        return self.assignment.n

    @property
    def k(self) -> int:
        return self.assignment.k

    def matrix(self) -> np.ndarray:
        return self.assignment.matrix()


@dataclass(frozen=True)
class EmbeddingView:
    """A per-view embedding.

    ``orthonormal=False`` admits scaled embeddings (e.g. ``U S^{1/2}``) that
    intentionally fail the column-orthonormality check.
    """

    embedding: Embedding
    orthonormal: bool = True

    def __post_init__(self):
        if not isinstance(self.embedding, Embedding):
            object.__setattr__(self, "embedding", Embedding(self.embedding))
        if self.orthonormal and self.embedding.residual > ORTHONORMAL_TOL:
            raise InputError(
                f"embedding view is not column-orthonormal (residual {self.embedding.residual:.3g})"
            )

    @property
    def n(self) -> int:
        return self.embedding.n

    @property
    def k(self) -> int:
        return self.embedding.k

    def matrix(self) -> np.ndarray:
        return np.asarray(self.embedding.matrix)


ViewInput = Union[AssignmentView, EmbeddingView]


def _coerce_views(views: Sequence) -> list:
    out = []
    for v in views:
        if isinstance(v, (AssignmentView, EmbeddingView)):
            out.append(v)
        elif isinstance(v, Assignment):
            out.append(AssignmentView(v))
        elif isinstance(v, Embedding):
            out.append(EmbeddingView(v))
        else:
            raise InputError(f"unsupported view type {type(v).__name__}")
    if len(out) < 2:
        raise InputError("joint clustering needs at least two views")
    ns = {v.n for v in out}
    if len(ns) != 1:
        raise InputError(f"views disagree on the number of items: {sorted(ns)}")
    return out


@dataclass(frozen=True)
class ProjectionMatrix:
    """Map from joint clusters to the clusters of one view."""

    map: np.ndarray
    k_v: int

    def __post_init__(self):
        m = np.asarray(self.map, dtype=np.int64).reshape(-1)
        if m.size == 0:
            raise InputError("projection map must be nonempty")
        if m.min() < 0 or m.max() >= self.k_v:
            raise InputError(f"projection targets must lie in [0, {self.k_v})")
        hit = np.bincount(m, minlength=self.k_v)
        if np.any(hit == 0):
            raise InputError(f"view clusters {np.flatnonzero(hit == 0).tolist()} have no preimage")
        m.setflags(write=False)
        object.__setattr__(self, "map", m)

    @property
    def k(self) -> int:
        return int(self.map.size)

    def matrix(self) -> np.ndarray:
        p = np.zeros((self.k, self.k_v))
        p[np.arange(self.k), self.map] = 1.0
        return p


def project_assignment(z: Assignment, p: ProjectionMatrix) -> Assignment:
    """View-level assignment induced by a joint assignment (``Z P``)."""
    if z.k != p.k:
        raise InputError(f"assignment has {z.k} clusters but projection expects {p.k}")
    return Assignment(p.map[z.labels], p.k_v)


def _view_matrices(views, regularize_first: bool, reg_c: float):
    mats = [v.matrix() for v in views]
    if regularize_first:
        for idx, v in enumerate(views):
            if isinstance(v, EmbeddingView):
                delta = reg_c * math.sqrt(v.k / v.n)
                mats[idx] = np.asarray(regularize(mats[idx], delta, v.k).matrix)
                break
        else:
            raise InputError("regularization requires at least one embedding view")
    return mats


def joint_matrix_krafty(views: Sequence, regularize_first: bool = False, reg_c: float = 2.0) -> np.ndarray:
    """Transposed Khatri-Rao product of the per-view matrices.

    Assignment views contribute their 0/1 clustering matrix, embedding
    views their matrix as given.
    """
    views = _coerce_views(views)
    return tkr_multi(_view_matrices(views, regularize_first, reg_c))


def joint_matrix_mase(views: Sequence, regularize_first: bool = False, reg_c: float = 2.0) -> np.ndarray:
    """Side-by-side concatenation of the per-view matrices."""
    views = _coerce_views(views)
    return np.hstack(_view_matrices(views, regularize_first, reg_c))


@dataclass(frozen=True)
class JointResult:
    labels: Assignment
    embedding: Embedding
    spectrum: Spectrum
    k_used: int
    k_source: str
    method: str
    dendrogram: Optional[Dendrogram] = None
    elbow: Optional[ElbowEstimate] = None

    @property
    def embedding_dim(self) -> int:
        return self.embedding.k


def _estimate_k(values: np.ndarray, which: int, strategy: str, zero_tail_stop: bool = False, n: int = 0):
    if n > values.size:
        # rank <= number of columns < n, so the next singular value is exactly zero
        values = np.append(values, 0.0)
    if strategy == "gap":
        return largest_gap(values), None
    if strategy != "profile":
        raise InputError(f"unknown k strategy {strategy!r}")
    if values.size < 3:
        return largest_gap(values), None
    w = which
    while True:
        try:
            est = profile_likelihood_elbow(values, w)
        except InputError:
            if w == 1:
                raise
            w -= 1
            continue
        if zero_tail_stop:
            # an exactly rank-deficient tail carries no further elbow
            floor = RANK_RTOL * values[0]
            for q in est.elbows[:-1]:
                if np.all(values[q:] <= floor):
                    return q, est
        return est.k_hat, est


def _joint(method, views, k, final_clusterer, seed, which_elbow, k_strategy, regularize_first, reg_c, zero_tail_stop):
    views = _coerce_views(views)
    n = views[0].n
    max_k = min(math.prod(v.k for v in views), n)
    if k is not None:
        k = int(k)
        # assignment views bound the number of occupied cells; embedding
        # columns do not bound the number of clusters
        cap = min(math.prod(v.k if isinstance(v, AssignmentView) else n for v in views), n)
        if not 1 <= k <= cap:
            raise InputError(f"k={k} must lie in [1, {cap}]")
    mats = _view_matrices(views, regularize_first, reg_c)
    m = tkr_multi(mats) if method == "krafty" else np.hstack(mats)

    values = singular_values(m)
    elbow = None
    if k is None:
        k, elbow = _estimate_k(values, which_elbow, k_strategy, zero_tail_stop, n)
        k = min(k, max_k)
        source = "estimated"
    else:
        source = "given"

    rank = max(numerical_rank(values, RANK_RTOL), 1)
    dim = min(k, rank)
    if dim < k:
        warnings.warn(
            f"k={k} exceeds the numerical rank {rank} of the {method} matrix; embedding in {dim} dimensions",
            RankWarning,
            stacklevel=3,
        )
    emb = svd_k(m, dim).left

    dendro = None
    if final_clusterer == "hc":
        dendro = hierarchical_complete(emb.matrix) if n >= 2 else None
        labels = cut_dendrogram(dendro, k) if dendro is not None else Assignment(np.zeros(n, dtype=int))
    elif final_clusterer == "kmeans":
        labels = kmeans(emb.matrix, k, restarts=10, seed=seed).assignment
    else:
        raise InputError(f"unknown final clusterer {final_clusterer!r}")
    return JointResult(
        labels=labels,
        embedding=emb,
        spectrum=Spectrum(values),
        k_used=k,
        k_source=source,
        method=method,
        dendrogram=dendro,
        elbow=elbow,
    )


def krafty(
    views: Sequence,
    k: Optional[int] = None,
    final_clusterer: str = "hc",
    seed: int = 0,
    which_elbow: int = 2,
    k_strategy: str = "profile",
    regularize_first: bool = False,
    reg_c: float = 2.0,
    zero_tail_stop: bool = False,
) -> JointResult:
    """Joint clustering through the transposed Khatri-Rao product.

    Parameters
    ----------
    views : sequence of AssignmentView, EmbeddingView, Assignment or Embedding
        Two or more views over the same ``n`` items.
    k : int, optional
        Number of joint clusters.  Estimated from the full spectrum of the
        joint matrix when omitted; when the matrix has fewer columns than
        rows, the structurally zero next singular value is appended so that
        a full-rank spectrum can still yield ``k`` equal to its length.
        A given ``k`` may exceed the embedding dimension (for instance when
        a view has fewer features than clusters); the embedding is then
        truncated at the numerical rank with a ``RankWarning``.
    final_clusterer : {"hc", "kmeans"}
        Complete-linkage cut at ``k`` (default) or k-means with 10 restarts.
    seed : int
        Seed of the k-means clusterer; HC is deterministic.
    which_elbow : int
        Profile-likelihood elbow used as the estimate (2 by default).
    k_strategy : {"profile", "gap"}
        Estimator used when ``k`` is omitted.
    regularize_first : bool
        Clip the row norms of the first embedding view at
        ``reg_c * sqrt(K_v / n)`` before forming the product.
    zero_tail_stop : bool
        With the profile estimator, stop at an earlier elbow when every
        value after it is numerically zero.

    Returns
    -------
    JointResult
        Labels, the ``n x k`` embedding, the full joint spectrum and, for
        HC, the dendrogram.  When ``k`` exceeds the numerical rank of the
        joint matrix the embedding uses only the available dimensions and a
        :class:`RankWarning` is emitted.
    """
    return _joint(
        "krafty", views, k, final_clusterer, seed, which_elbow, k_strategy, regularize_first, reg_c, zero_tail_stop
    )


def mase(
    views: Sequence,
    k: Optional[int] = None,
    final_clusterer: str = "hc",
    seed: int = 0,
    which_elbow: int = 2,
    k_strategy: str = "profile",
    regularize_first: bool = False,
    reg_c: float = 2.0,
    zero_tail_stop: bool = False,
) -> JointResult:
    """Joint clustering of the concatenated per-view matrices.

    Same interface and return value as :func:`krafty`; the spectrum has
    ``min(n, sum K_v)`` entries.
    """
    return _joint(
        "mase", views, k, final_clusterer, seed, which_elbow, k_strategy, regularize_first, reg_c, zero_tail_stop
    )
