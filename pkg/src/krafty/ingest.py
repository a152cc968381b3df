"""Weighted directed networks as joint-clustering views.

Each network is embedded through the SVD of its adjacency matrix; rows of
``U S^{1/2}`` describe vertices as exporters (senders) and rows of
``V S^{1/2}`` as importers (receivers).  Rows are rescaled to unit length
so that only the direction of a vertex's trade profile matters.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .clustering import kmeans
from .errors import InputError
from .io import atomic_write_text, format_float
from .joint import AssignmentView, JointResult, krafty, mase
from .linalg import svd_k
from .types import Assignment, Embedding

__all__ = [
    "WeightedNetwork",
    "RoleEmbedding",
    "TradeView",
    "TradeResult",
    "load_edge_list",
    "write_edge_list",
    "load_vertex_universe",
    "exporter_importer_embeddings",
    "trade_pipeline",
]

EDGE_HEADER = ("source", "target", "weight")
ROLES = ("exporter", "importer")


@dataclass(frozen=True)
class WeightedNetwork:
    """Directed network with nonnegative edge weights over named vertices."""

    vertex_names: Tuple[str, ...]
    adjacency: np.ndarray

    def __post_init__(self):
        names = tuple(str(v) for v in self.vertex_names)
        if len(set(names)) != len(names):
            raise InputError("vertex names must be unique")
        a = np.array(self.adjacency, dtype=np.float64)
        if a.ndim != 2 or a.shape != (len(names), len(names)):
            raise InputError(f"adjacency must be {len(names)}x{len(names)}, got {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise InputError("adjacency entries must be finite and nonnegative")
        a.setflags(write=False)
        object.__setattr__(self, "vertex_names", names)
        object.__setattr__(self, "adjacency", a)

    @property
    def n(self) -> int:
        return len(self.vertex_names)

    def reorder(self, names: Sequence[str]) -> "WeightedNetwork":
        """Same network with vertices listed in the order ``names``."""
        pos = {v: i for i, v in enumerate(self.vertex_names)}
        if set(names) != set(pos) or len(names) != len(pos):
            raise InputError("reorder needs a permutation of the vertex names")
        idx = np.array([pos[v] for v in names], dtype=np.int64)
        return WeightedNetwork(tuple(names), self.adjacency[np.ix_(idx, idx)])


def load_vertex_universe(path) -> List[str]:
    """One vertex name per line; blank lines are skipped."""
    try:
        with open(path, encoding="utf-8") as fh:
            names = [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    if len(set(names)) != len(names):
        raise InputError(f"{path}: duplicate vertex names")
    return names


def load_edge_list(path, universe: Optional[Sequence[str]] = None) -> WeightedNetwork:
    """Read a ``source,target,weight`` CSV into a network.

    Duplicate edges are summed.  Without ``universe`` the vertex set is the
    sorted union of observed names; with it, the order of ``universe`` is
    kept and names outside it are rejected.
    """
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    start = 0
    if rows and tuple(c.strip().lower() for c in rows[0]) == EDGE_HEADER:
        start = 1
    elif rows and any(c.strip() for c in rows[0]):
        raise InputError(f"{path}:1: expected header {','.join(EDGE_HEADER)}")
    edges = []
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise InputError(f"{path}:{lineno}: expected 3 fields (source,target,weight), found {len(row)}")
        src, dst, raw = (c.strip() for c in row)
        if not src or not dst:
            raise InputError(f"{path}:{lineno}: empty vertex name")
        try:
            w = float(raw)
        except ValueError:
            raise InputError(f"{path}:{lineno}: cannot parse weight {raw!r}") from None
        if not math.isfinite(w) or w < 0:
            raise InputError(f"{path}:{lineno}: weight must be finite and nonnegative, got {raw!r}")
        edges.append((lineno, src, dst, w))
    if universe is None:
        names = sorted({e[1] for e in edges} | {e[2] for e in edges})
    else:
        names = [str(v) for v in universe]
    if not names:
        raise InputError(f"{path}: no vertices (empty file and no universe given)")
    pos = {v: i for i, v in enumerate(names)}
    a = np.zeros((len(names), len(names)))
    for lineno, src, dst, w in edges:
        for v in (src, dst):
            if v not in pos:
                raise InputError(f"{path}:{lineno}: vertex {v!r} is not in the vertex universe")
        a[pos[src], pos[dst]] += w
    return WeightedNetwork(tuple(names), a)


def write_edge_list(path, net: WeightedNetwork) -> None:
    """Emit every nonzero entry, row-major, in ``load_edge_list`` format."""
    lines = [",".join(EDGE_HEADER)]
    rows, cols = np.nonzero(net.adjacency)
    for i, j in zip(rows, cols):
        lines.append(f"{net.vertex_names[i]},{net.vertex_names[j]},{format_float(net.adjacency[i, j])}")
    atomic_write_text(path, "\n".join(lines) + "\n")


@dataclass(frozen=True)
class RoleEmbedding:
    """Unit-row embedding of one role plus the rows that could not be normalized."""

    embedding: Embedding
    isolated: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.embedding.matrix)


def _unit_rows(m: np.ndarray, isolated: np.ndarray) -> RoleEmbedding:
    norms = np.linalg.norm(m, axis=1)
    scale = np.max(norms) if norms.size else 0.0
    flags = isolated | (norms <= 1e-12 * max(scale, 1e-300))
    out = np.zeros_like(m)
    keep = ~flags
    out[keep] = m[keep] / norms[keep, None]
    return RoleEmbedding(Embedding(out), flags.copy())


def exporter_importer_embeddings(net: WeightedNetwork, d: int) -> Tuple[RoleEmbedding, RoleEmbedding]:
    """Unit-normalized rows of ``U S^{1/2}`` (exporters) and ``V S^{1/2}`` (importers).

    Parameters
    ----------
    net : WeightedNetwork
    d : int
        Embedding dimension, ``1 <= d <= n``.

    Returns
    -------
    exporter, importer : RoleEmbedding
        Vertices without outgoing (resp. incoming) weight, or whose
        projected row vanishes, are flagged in ``isolated`` and given the
        zero row.
    """
    d = int(d)
    if not 1 <= d <= net.n:
        raise InputError(f"d={d} must lie in [1, {net.n}]")
    res = svd_k(net.adjacency, d)
    root = np.sqrt(res.values.values)
    a = net.adjacency
    exp = _unit_rows(np.asarray(res.left.matrix) * root, a.sum(axis=1) == 0)
    imp = _unit_rows(res.right * root, a.sum(axis=0) == 0)
    return exp, imp


@dataclass(frozen=True)
class TradeView:
    network: WeightedNetwork
    d: int
    k: int
    role: str = "exporter"

    def __post_init__(self):
        if self.role not in ROLES:
            raise InputError(f"role must be one of {ROLES}, got {self.role!r}")
        if int(self.k) < 1:
            raise InputError(f"k must be positive, got {self.k}")


@dataclass(frozen=True)
class TradeResult:
    """Joint clustering of the retained vertices.

    ``labels`` covers every vertex in ``vertex_names`` order with ``-1`` for
    vertices excluded as isolated in some view.
    """

    vertex_names: Tuple[str, ...]
    labels: np.ndarray
    excluded: Tuple[str, ...]
    view_labels: Tuple[np.ndarray, ...]
    joint: JointResult


def _shared_order(views: Sequence[TradeView]) -> List[str]:
    first = views[0].network.vertex_names
    base = set(first)
    for idx, v in enumerate(views[1:], start=2):
        other = set(v.network.vertex_names)
        if other != base:
            diff = sorted(base ^ other)
            shown = ", ".join(diff[:20]) + (" ..." if len(diff) > 20 else "")
            raise InputError(f"view 1 and view {idx} have different vertex sets; symmetric difference: {shown}")
    return list(first)


def trade_pipeline(
    views: Sequence,
    k: Optional[int] = None,
    method: str = "krafty",
    seed: int = 0,
    which_elbow: int = 2,
) -> TradeResult:
    """Joint clusters of vertices from several directed networks.

    Each view is embedded in its role (exporter or importer), clustered by
    k-means into ``k_v`` groups, and the resulting assignments are combined
    by KRAFTY or MASE.  Vertices that are isolated in the role of any view
    are left out and labelled ``-1``.
    """
    views = [v if isinstance(v, TradeView) else TradeView(*v) for v in views]
    if len(views) < 2:
        raise InputError("the trade pipeline needs at least two views")
    if method not in ("krafty", "mase"):
        raise InputError(f"unknown method {method!r}")
    names = _shared_order(views)
    nets = [v.network if v.network.vertex_names == tuple(names) else v.network.reorder(names) for v in views]

    roles = []
    for v, net in zip(views, nets):
        exp, imp = exporter_importer_embeddings(net, v.d)
        roles.append(exp if v.role == "exporter" else imp)
    excluded = np.zeros(len(names), dtype=bool)
    for r in roles:
        excluded |= r.isolated
    keep = np.flatnonzero(~excluded)
    if keep.size < 2:
        raise InputError("fewer than two vertices remain after removing isolated vertices")

    streams = np.random.SeedSequence(seed).spawn(len(views))
    inputs, view_labels = [], []
    for v, r, ss in zip(views, roles, streams):
        x = r.matrix[keep]
        if v.k > keep.size:
            raise InputError(f"k_v={v.k} exceeds the {keep.size} retained vertices")
        km = kmeans(x, v.k, restarts=10, seed=int(ss.generate_state(1)[0]))
        inputs.append(AssignmentView(km.assignment))
        full = np.full(len(names), -1, dtype=np.int64)
        full[keep] = km.assignment.labels
        view_labels.append(full)

    fn = krafty if method == "krafty" else mase
    res = fn(inputs, k=k, seed=seed, which_elbow=which_elbow, zero_tail_stop=True)
    labels = np.full(len(names), -1, dtype=np.int64)
    labels[keep] = res.labels.labels
    return TradeResult(
        vertex_names=tuple(names),
        labels=labels,
        excluded=tuple(names[i] for i in np.flatnonzero(excluded)),
        view_labels=tuple(view_labels),
        joint=res,
    )
