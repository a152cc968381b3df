"""Dense matrix kernels: the transposed Khatri-Rao product, truncated SVD,
clustering-matrix embeddings, column selectors, row regularization and
orthogonal alignment."""
from __future__ import annotations

from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

from ._backend import get_kernels
from .errors import InputError, NumericError
from .types import Assignment, Embedding, SelectorMatrix, Spectrum, SvdResult, as_matrix

__all__ = [
    "tkr",
    "tkr_multi",
    "svd_k",
    "singular_values",
    "numerical_rank",
    "embedding_from_assignment",
    "derive_selector",
    "regularize",
    "procrustes_align",
    "Alignment",
    "FULL_SVD_LIMIT",
    "ZERO_COLUMN_TOL",
]

#: Above this min-dimension, ``svd_k`` switches to randomized subspace iteration.
FULL_SVD_LIMIT = 512
ZERO_COLUMN_TOL = 1e-12
_OVERSAMPLE = 8
_POWER_ITERS = 4
_RSVD_SEED = 0x5EED


def tkr(a, b) -> np.ndarray:
    """Transposed Khatri-Rao (row-wise Kronecker) product.

    Row ``i`` of the result is ``kron(a[i], b[i])``, i.e. the blocks
    ``[a[i, 0] * b[i] | ... | a[i, m-1] * b[i]]``.

    Parameters
    ----------
    a : array_like, shape (n, m)
    b : array_like, shape (n, q)

    Returns
    -------
    ndarray, shape (n, m * q)
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[0] != b.shape[0]:
        raise InputError(f"row counts differ: {a.shape[0]} != {b.shape[0]}")
    return get_kernels().tkr(a, b)


def tkr_multi(mats: Sequence) -> np.ndarray:
    """Left-associated fold of :func:`tkr` over two or more matrices."""
    mats = list(mats)
    if len(mats) < 2:
        raise InputError("tkr_multi needs at least two matrices")
    return reduce(tkr, mats)


def _fix_signs(u: np.ndarray, vt: np.ndarray):
    # largest-magnitude entry of each left vector positive; argmax picks the lowest index
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def _randomized(m: np.ndarray, k: int):
    rng = np.random.default_rng(_RSVD_SEED)
    ell = k + _OVERSAMPLE
    q, _ = np.linalg.qr(m @ rng.standard_normal((m.shape[1], ell)))
    for _ in range(_POWER_ITERS):
        q, _ = np.linalg.qr(m.T @ q)
        q, _ = np.linalg.qr(m @ q)
    ub, s, vt = np.linalg.svd(q.T @ m, full_matrices=False)
    return q @ ub[:, :k], s[:k], vt[:k]


def svd_k(m, k: int) -> SvdResult:
    """Top-``k`` singular triplets with a deterministic sign convention.

    Uses a full LAPACK decomposition when ``min(m.shape) <= FULL_SVD_LIMIT``
    and randomized subspace iteration (oversampling 8, 4 power iterations,
    fixed internal seed) otherwise.  Each left singular vector is flipped so
    that its largest-magnitude entry is positive.

    Raises
    ------
    InputError
        If ``k`` is not in ``[1, min(m.shape)]``.
    NumericError
        If the decomposition does not converge.
    """
    m = as_matrix(m)
    k = int(k)
    lim = min(m.shape)
    if not 1 <= k <= lim:
        raise InputError(f"k={k} outside [1, {lim}]")
    try:
        if lim <= FULL_SVD_LIMIT or k + _OVERSAMPLE >= lim:
            u, s, vt = np.linalg.svd(m, full_matrices=False)
            u, s, vt = u[:, :k], s[:k], vt[:k]
        else:
            u, s, vt = _randomized(m, k)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge for a {m.shape} matrix: {exc}") from exc
    u, vt = _fix_signs(u, vt)
    s = np.maximum(s, 0.0)
    return SvdResult(left=Embedding(u), values=Spectrum(s), right=vt.T.copy())


def singular_values(m) -> np.ndarray:
    """All ``min(m.shape)`` singular values in descending order."""
    m = as_matrix(m)
    try:
        return np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge for a {m.shape} matrix: {exc}") from exc


def numerical_rank(values, rtol: float = 1e-8) -> int:
    """Count of singular values above ``rtol * values[0]``."""
    v = np.asarray(values, dtype=float)
    if v.size == 0 or v[0] <= 0:
        return 0
    return int(np.count_nonzero(v > rtol * v[0]))


def embedding_from_assignment(z: Assignment) -> Embedding:
    """Column-normalized clustering matrix ``Z D^{-1/2}``."""
    sizes = z.sizes
    if np.any(sizes == 0):
        raise InputError("empty cluster in assignment")
    return Embedding(z.matrix() / np.sqrt(sizes))


def derive_selector(m) -> SelectorMatrix:
    """Indices of the columns of ``m`` that contain a nonzero entry.

    A column counts as zero when its max-abs entry is ``<= 1e-12``.
    """
    m = as_matrix(m)
    kept = np.flatnonzero(np.max(np.abs(m), axis=0) > ZERO_COLUMN_TOL)
    if kept.size == 0:
        raise InputError("all columns are zero")
    return SelectorMatrix(source_cols=m.shape[1], kept=tuple(kept.tolist()))


def regularize(u, delta: float, k: int) -> Embedding:
    """Clip row norms at ``delta`` and return the top-``k`` left singular vectors.

    Each row ``u[i]`` is rescaled to norm ``min(delta, ||u[i]||)`` before a
    fresh truncated SVD.
    """
    m = as_matrix(u.matrix if isinstance(u, Embedding) else u, "u")
    if not delta > 0:
        raise InputError(f"delta must be positive, got {delta}")
    if not 1 <= k <= m.shape[1]:
        raise InputError(f"k={k} outside [1, {m.shape[1]}]")
    norms = np.linalg.norm(m, axis=1)
    scale = np.ones_like(norms)
    big = norms > delta
    scale[big] = delta / norms[big]
    return svd_k(m * scale[:, None], k).left


class Alignment(NamedTuple):
    rotation: np.ndarray
    residual: float
    degenerate: bool


def procrustes_align(a, b, rtol: float = 1e-10) -> Alignment:
    """Orthogonal ``W`` minimizing ``||a W - b||_F``.

    ``W = W1 W2^T`` where ``a^T b = W1 S W2^T``.  When ``a^T b`` is rank
    deficient ``W`` is still orthogonal but not unique; ``degenerate`` is
    then set.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise InputError(f"shapes differ: {a.shape} != {b.shape}")
    w1, s, w2t = np.linalg.svd(a.T @ b)
    w = w1 @ w2t
    degenerate = bool(s[-1] <= rtol * max(s[0], np.finfo(float).tiny))
    return Alignment(w, float(np.linalg.norm(a @ w - b)), degenerate)
