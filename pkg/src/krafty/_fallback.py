"""Pure-Python/numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` one for one and are used when the compiled
extension is unavailable or ``KRAFTY_PURE_PYTHON`` is set.
"""
import numpy as np


def tkr(a, b):
    n, m = a.shape
    q = b.shape[1]
    return (a[:, :, None] * b[:, None, :]).reshape(n, m * q)


def assign_nearest(x, centers):
    """Index of the nearest center per row (lowest index on ties) and the
    squared distance to it."""
    diff = x[:, None, :] - centers[None, :, :]
    d2 = np.einsum("nkd,nkd->nk", diff, diff)
    labels = np.argmin(d2, axis=1)
    return labels.astype(np.int64), d2[np.arange(x.shape[0]), labels]


def _row_min(dist, active, i):
    """Nearest active slot ``j > i`` of slot ``i``; ties go to the lowest j."""
    cand = dist[i, i + 1:]
    mask = active[i + 1:]
    if not mask.any():
        return np.inf, -1
    vals = np.where(mask, cand, np.inf)
    j = int(np.argmin(vals))
    return vals[j], i + 1 + j


def complete_linkage(dist):
    """Greedy complete-linkage agglomeration on a dense distance matrix.

    Cluster slots are indexed by the smallest member they contain; a merge
    of slots ``i < j`` keeps slot ``i``.  At every step the pair with the
    smallest linkage distance is merged, ties resolved towards the
    lexicographically smallest ``(i, j)``.

    Returns
    -------
    slot_i, slot_j : ndarray of int64
        Merged slots per step, ``slot_i < slot_j``.
    linkage : ndarray of float64
        Complete-linkage distance between the merged clusters.
    diameter : ndarray of float64
        Diameter of the newly formed cluster.
    """
    d = np.array(dist, dtype=np.float64, copy=True)
    n = d.shape[0]
    active = np.ones(n, dtype=bool)
    diam = np.zeros(n)
    nn_val = np.full(n, np.inf)
    nn_idx = np.full(n, -1, dtype=np.int64)
    for i in range(n - 1):
        nn_val[i], nn_idx[i] = _row_min(d, active, i)

    out_i = np.empty(n - 1, dtype=np.int64)
    out_j = np.empty(n - 1, dtype=np.int64)
    out_link = np.empty(n - 1)
    out_diam = np.empty(n - 1)
    for step in range(n - 1):
        i = int(np.argmin(nn_val))
        j = int(nn_idx[i])
        link = d[i, j]
        out_i[step], out_j[step], out_link[step] = i, j, link
        diam[i] = max(diam[i], diam[j], link)
        out_diam[step] = diam[i]

        active[j] = False
        nn_val[j] = np.inf
        nn_idx[j] = -1
        merged = np.maximum(d[i], d[j])
        d[i, :] = merged
        d[:, i] = merged

        stale = np.flatnonzero(active & ((nn_idx == i) | (nn_idx == j)))
        for r in np.union1d(stale, [i]):
            nn_val[r], nn_idx[r] = _row_min(d, active, int(r))
    return out_i, out_j, out_link, out_diam
